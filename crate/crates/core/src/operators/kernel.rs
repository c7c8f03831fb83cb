//! Weight tables for power-law kernels on uniform grids.
//!
//! A [`PairTable`] stores, for each node offset, the integral of
//! `|z|^(-dim-s)` over the corresponding cell, plus for every node the
//! integral of the kernel over everything outside the union of interior
//! cells (the exterior tail, where `u = 0`). The excluded self cell is
//! accounted for by a nearest-neighbour correction folded into the table.

use crate::grid::Grid;
use crate::quadrature::GaussLegendre;
use std::f64::consts::PI;
use std::sync::OnceLock;

const NEAR: usize = 3;

fn gl8() -> &'static GaussLegendre {
    static G: OnceLock<GaussLegendre> = OnceLock::new();
    G.get_or_init(|| GaussLegendre::new(8))
}

fn gl4() -> &'static GaussLegendre {
    static G: OnceLock<GaussLegendre> = OnceLock::new();
    G.get_or_init(|| GaussLegendre::new(4))
}

fn gl3() -> &'static GaussLegendre {
    static G: OnceLock<GaussLegendre> = OnceLock::new();
    G.get_or_init(|| GaussLegendre::new(3))
}

/// Integrates `f(θ, ρ(θ))` over a full turn, where `ρ(θ)` is the distance
/// from `(px, py)` to the boundary of the rectangle `[x0,x1] x [y0,y1]`
/// along direction `θ`. The point must lie inside the rectangle.
pub(crate) fn polar_over_rect<F: Fn(f64, f64) -> f64>(
    p: [f64; 2],
    rect: [f64; 4],
    panels: usize,
    f: F,
) -> f64 {
    let [x0, x1, y0, y1] = rect;
    let (px, py) = (p[0], p[1]);
    let dr = x1 - px;
    let dl = px - x0;
    let dt = y1 - py;
    let db = py - y0;
    // corner angles, counter-clockwise starting from the lower-right corner
    let a_rb = (-db).atan2(dr);
    let a_rt = dt.atan2(dr);
    let a_lt = dt.atan2(-dl);
    let a_lb = (-db).atan2(-dl) + 2.0 * PI;
    let rho = |th: f64| -> f64 {
        let (s, c) = th.sin_cos();
        let mut r = f64::INFINITY;
        if c > 1e-300 {
            r = r.min(dr / c);
        }
        if c < -1e-300 {
            r = r.min(-dl / c);
        }
        if s > 1e-300 {
            r = r.min(dt / s);
        }
        if s < -1e-300 {
            r = r.min(-db / s);
        }
        r
    };
    let g = gl8();
    let pieces = [(a_rb, a_rt), (a_rt, a_lt), (a_lt, a_lb), (a_lb, a_rb + 2.0 * PI)];
    pieces
        .iter()
        .map(|&(lo, hi)| g.integrate_composite(lo, hi, panels, |th| f(th, rho(th))))
        .sum()
}

/// `(1/2) ∫_cell |z_axis|^p |z|^(-dim-e) dz / h_axis^p` over the self cell.
///
/// This is the weight that, put on the two nearest neighbours along `axis`,
/// reproduces the leading-order self-cell contribution of a kernel of
/// order `e` acting through `p`-th powers of differences.
pub(crate) fn self_cell_weight(grid: &Grid, axis: usize, p: f64, e: f64) -> f64 {
    let h = grid.h(axis);
    if grid.dim() == 1 {
        return (0.5 * h).powf(p - e) / (p - e) / h.powf(p);
    }
    let hx = 0.5 * grid.h(0);
    let hy = 0.5 * grid.h(1);
    let m = polar_over_rect([0.0, 0.0], [-hx, hx, -hy, hy], 4, |th, rho| {
        let c = if axis == 0 { th.cos() } else { th.sin() };
        c.abs().powf(p) * rho.powf(p - e) / (p - e)
    });
    0.5 * m / h.powf(p)
}

/// Cell-integrated kernel weights and exterior tails for `|z|^(-dim-s)`.
#[derive(Debug, Clone)]
pub struct PairTable {
    grid: Grid,
    s: f64,
    w: Vec<f64>,
    tail: Vec<f64>,
}

impl PairTable {
    /// Builds the table with the nearest-neighbour self-cell correction for
    /// an operator acting on `p`-th powers of differences with kernel order `e`
    /// (`e = s` for the fractional Laplacian, `e = σ p` for the p-Laplacian),
    /// multiplied by `corr_scale`.
    pub fn new(grid: &Grid, s: f64, p: f64, e: f64, corr_scale: f64) -> Self {
        let nx = grid.n(0);
        let ny = grid.n(1);
        let mut w = vec![0.0; nx * ny];
        if grid.dim() == 1 {
            let h = grid.h(0);
            for (d, wd) in w.iter_mut().enumerate().skip(1) {
                let df = d as f64 * h;
                *wd = ((df - 0.5 * h).powf(-s) - (df + 0.5 * h).powf(-s)) / s;
            }
        } else {
            let (hx, hy) = (grid.h(0), grid.h(1));
            let ker = |x: f64, y: f64| (x * x + y * y).powf(-0.5 * (2.0 + s));
            for dy in 0..ny {
                for dx in 0..nx {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let cx = dx as f64 * hx;
                    let cy = dy as f64 * hy;
                    let (x0, x1) = (cx - 0.5 * hx, cx + 0.5 * hx);
                    let (y0, y1) = (cy - 0.5 * hy, cy + 0.5 * hy);
                    w[dx + nx * dy] = if dx.max(dy) <= NEAR {
                        let k = 4;
                        let (sx, sy) = ((x1 - x0) / k as f64, (y1 - y0) / k as f64);
                        let g = gl4();
                        let mut acc = 0.0;
                        for a in 0..k {
                            for b in 0..k {
                                let xa = x0 + sx * a as f64;
                                let yb = y0 + sy * b as f64;
                                acc += g.integrate_2d(xa, xa + sx, yb, yb + sy, ker);
                            }
                        }
                        acc
                    } else {
                        gl3().integrate_2d(x0, x1, y0, y1, ker)
                    };
                }
            }
        }
        if corr_scale != 0.0 {
            if nx > 1 {
                w[1] += corr_scale * self_cell_weight(grid, 0, p, e);
            }
            if grid.dim() == 2 && ny > 1 {
                w[nx] += corr_scale * self_cell_weight(grid, 1, p, e);
            }
        }
        let tail = (0..grid.len()).map(|i| exterior_tail(grid, i, s)).collect();
        Self { grid: *grid, s, w, tail }
    }

    /// Plain table for the fractional Laplacian of order `s = 2σ`.
    pub fn fractional_laplacian(grid: &Grid, sigma: f64) -> Self {
        Self::new(grid, 2.0 * sigma, 2.0, 2.0 * sigma, 1.0)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    /// Weight between two nodes by linear index.
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let g = &self.grid;
        let [ix, iy] = g.split(i);
        let [jx, jy] = g.split(j);
        self.w[ix.abs_diff(jx) + g.n(0) * iy.abs_diff(jy)]
    }

    #[inline]
    pub fn weight_by_offset(&self, dx: usize, dy: usize) -> f64 {
        self.w[dx + self.grid.n(0) * dy]
    }

    pub fn tail(&self) -> &[f64] {
        &self.tail
    }

    /// Adds extra weight to the nearest neighbours along each axis.
    pub fn add_nearest(&mut self, wx: f64, wy: f64) {
        let nx = self.grid.n(0);
        if nx > 1 {
            self.w[1] += wx;
        }
        if self.grid.dim() == 2 && self.grid.n(1) > 1 {
            self.w[nx] += wy;
        }
    }

    /// Diagonal `Σ_j w_ij + τ_i` of the linear operator built on this table.
    pub fn row_sums(&self) -> Vec<f64> {
        let n = self.grid.len();
        (0..n)
            .map(|i| (0..n).filter(|&j| j != i).map(|j| self.weight(i, j)).sum::<f64>() + self.tail[i])
            .collect()
    }
}

/// `∫ |x_i - y|^(-dim-s) dy` over the complement of the union of interior cells.
pub(crate) fn exterior_tail(grid: &Grid, i: usize, s: f64) -> f64 {
    let x = grid.coords(i);
    if grid.dim() == 1 {
        let h = grid.h(0);
        let left = x[0] - grid.lo(0) - 0.5 * h;
        let right = grid.hi(0) - 0.5 * h - x[0];
        return (left.powf(-s) + right.powf(-s)) / s;
    }
    let rect = union_rect(grid);
    polar_over_rect(x, rect, 6, |_, rho| rho.powf(-s) / s)
}

/// The rectangle covered by the interior cells.
pub(crate) fn union_rect(grid: &Grid) -> [f64; 4] {
    let hx = 0.5 * grid.h(0);
    let hy = 0.5 * grid.h(1);
    [grid.lo(0) + hx, grid.hi(0) - hx, grid.lo(1) + hy, grid.hi(1) - hy]
}

/// Per-axis one-dimensional table used by the anisotropic operator.
#[derive(Debug, Clone)]
pub struct AxisTable {
    pub axis: usize,
    pub w: Vec<f64>,
    pub tail: Vec<f64>,
}

impl AxisTable {
    pub fn new(grid: &Grid, axis: usize, sigma: f64) -> Self {
        let s = 2.0 * sigma;
        let n = grid.n(axis);
        let h = grid.h(axis);
        let mut w = vec![0.0; n];
        for (d, wd) in w.iter_mut().enumerate().skip(1) {
            let df = d as f64 * h;
            *wd = ((df - 0.5 * h).powf(-s) - (df + 0.5 * h).powf(-s)) / s;
        }
        if n > 1 {
            w[1] += (0.5 * h).powf(2.0 - s) / (2.0 - s) / (h * h);
        }
        let tail = (0..n)
            .map(|i| {
                let x = grid.node(axis, i);
                let left = x - grid.lo(axis) - 0.5 * h;
                let right = grid.hi(axis) - 0.5 * h - x;
                (left.powf(-s) + right.powf(-s)) / s
            })
            .collect();
        Self { axis, w, tail }
    }
}

/// Riesz potential weights `c(n,σ) |z|^(-(n-2σ))` on an extended grid that
/// also covers one ring of ghost nodes.
#[derive(Debug, Clone)]
pub struct RieszTable {
    grid: Grid,
    w: Vec<f64>,
    ext: [usize; 2],
}

impl RieszTable {
    pub fn new(grid: &Grid, sigma: f64) -> Self {
        let dim = grid.dim();
        let nd = dim as f64;
        let c = riesz_constant(dim, sigma);
        let e = nd - 2.0 * sigma;
        let ext = [grid.n(0) + 2, if dim == 2 { grid.n(1) + 2 } else { 1 }];
        let vol = grid.cell_volume();
        let mut w = vec![0.0; ext[0] * ext[1]];
        for dy in 0..ext[1] {
            for dx in 0..ext[0] {
                let r2 = (dx as f64 * grid.h(0)).powi(2)
                    + if dim == 2 { (dy as f64 * grid.h(1)).powi(2) } else { 0.0 };
                w[dx + ext[0] * dy] = if dx == 0 && dy == 0 {
                    c * self_cell_integral(grid, e)
                } else {
                    c * r2.powf(-0.5 * e) * vol
                };
            }
        }
        Self { grid: *grid, w, ext }
    }

    /// Weight between extended-grid offsets.
    #[inline]
    pub fn weight(&self, dx: usize, dy: usize) -> f64 {
        self.w[dx + self.ext[0] * dy]
    }

    /// Convolution evaluated on interior nodes and the ghost ring.
    /// Returns values indexed by `(ix + 1) + (nx + 2) * (iy + 1)` (2D) or `ix + 1` (1D).
    pub fn convolve_extended(&self, u: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let (ex, ey) = (self.ext[0], self.ext[1]);
        let dim2 = g.dim() == 2;
        let support: Vec<(usize, usize, f64)> = (0..g.len())
            .filter(|&j| u[j] != 0.0)
            .map(|j| {
                let [jx, jy] = g.split(j);
                (jx + 1, if dim2 { jy + 1 } else { 0 }, u[j])
            })
            .collect();
        crate::par::map_range(ex * ey, |k| {
            let kx = k % ex;
            let ky = k / ex;
            let mut acc = 0.0;
            for &(jx, jy, v) in &support {
                acc += self.weight(kx.abs_diff(jx), ky.abs_diff(jy)) * v;
            }
            acc
        })
    }

    /// Convolution on interior nodes only.
    pub fn convolve(&self, u: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let full = self.convolve_extended(u);
        let ex = self.ext[0];
        let dim2 = g.dim() == 2;
        (0..g.len())
            .map(|i| {
                let [ix, iy] = g.split(i);
                full[(ix + 1) + ex * if dim2 { iy + 1 } else { 0 }]
            })
            .collect()
    }
}

/// `c(n,σ) = Γ(n/2 - σ) / (4^σ π^(n/2) Γ(σ))`.
pub fn riesz_constant(dim: usize, sigma: f64) -> f64 {
    use statrs::function::gamma::gamma;
    let nd = dim as f64;
    gamma(0.5 * nd - sigma) / (4f64.powf(sigma) * PI.powf(0.5 * nd) * gamma(sigma))
}

/// Normalizing constant of the integral fractional Laplacian,
/// `4^σ Γ(n/2 + σ) / (π^(n/2) |Γ(-σ)|)`.
pub fn fractional_laplacian_constant(dim: usize, sigma: f64) -> f64 {
    use statrs::function::gamma::gamma;
    let nd = dim as f64;
    4f64.powf(sigma) * gamma(0.5 * nd + sigma) / (PI.powf(0.5 * nd) * gamma(-sigma).abs())
}

// ∫_cell |z|^(-e) dz over the cell centred at the origin, e < dim.
fn self_cell_integral(grid: &Grid, e: f64) -> f64 {
    if grid.dim() == 1 {
        let hh = 0.5 * grid.h(0);
        return 2.0 * hh.powf(1.0 - e) / (1.0 - e);
    }
    let hx = 0.5 * grid.h(0);
    let hy = 0.5 * grid.h(1);
    polar_over_rect([0.0, 0.0], [-hx, hx, -hy, hy], 4, |_, rho| rho.powf(2.0 - e) / (2.0 - e))
}
