//! Finite-difference operators on the interior nodes, with zero ghost values.

use super::{signed_power, RieszTable, VectorPotential};
use crate::grid::{Field, Grid};
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub(super) fn neg_laplacian(u: &Field, d: f64) -> Vec<Complex64> {
    let g = u.grid();
    let mut out = vec![ZERO; u.len()];
    for (i, o) in out.iter_mut().enumerate() {
        let [ix, iy] = g.split(i);
        let (ix, iy) = (ix as isize, iy as isize);
        let c = u.at(ix, iy);
        let hx2 = g.h(0) * g.h(0);
        let mut v = (c * 2.0 - u.at(ix - 1, iy) - u.at(ix + 1, iy)) / hx2;
        if g.dim() == 2 {
            let hy2 = g.h(1) * g.h(1);
            v += (c * 2.0 - u.at(ix, iy - 1) - u.at(ix, iy + 1)) / hy2;
        }
        *o = v * d;
    }
    out
}

/// Peierls-substituted Laplacian: hops pick up `exp(-i (x_j - x_i)·A(midpoint))`.
pub(super) fn magnetic(u: &Field, a: &VectorPotential) -> Vec<Complex64> {
    let g = u.grid();
    let mut out = vec![ZERO; u.len()];
    for (i, o) in out.iter_mut().enumerate() {
        let [ix, iy] = g.split(i);
        let x = g.coords(i);
        let (ix, iy) = (ix as isize, iy as isize);
        let c = u.at(ix, iy);
        let mut v = ZERO;
        for axis in 0..g.dim() {
            let h = g.h(axis);
            let (dx, dy) = if axis == 0 { (1, 0) } else { (0, 1) };
            let mut mid = x;
            mid[axis] += 0.5 * h;
            let tp = h * a.eval(mid)[axis];
            mid[axis] -= h;
            let tm = -h * a.eval(mid)[axis];
            let up = u.at(ix + dx, iy + dy) * Complex64::from_polar(1.0, -tp);
            let dn = u.at(ix - dx, iy - dy) * Complex64::from_polar(1.0, -tm);
            v += (c * 2.0 - up - dn) / (h * h);
        }
        *o = v;
    }
    out
}

// Gradient at the midpoint of every edge along `axis`, edges to the ghost
// ring included. Component along `axis` is the edge difference, the other
// one averages the central differences at the two endpoints.
struct EdgeGrad {
    along: Vec<Complex64>,
    sq: Vec<f64>,
}

fn edge_gradients(w: &Field, axis: usize) -> EdgeGrad {
    let g = w.grid();
    let (nx, ny) = (g.n(0) as isize, g.n(1) as isize);
    let (ex, ey) = if axis == 0 { (nx + 1, ny) } else { (nx, ny + 1) };
    let h = g.h(axis);
    let mut along = Vec::with_capacity((ex * ey) as usize);
    let mut sq = Vec::with_capacity((ex * ey) as usize);
    for ky in 0..ey {
        for kx in 0..ex {
            // endpoints a -> b
            let (ax, ay, bx, by) =
                if axis == 0 { (kx - 1, ky, kx, ky) } else { (kx, ky - 1, kx, ky) };
            let ga = (w.at(bx, by) - w.at(ax, ay)) / h;
            let mut s = ga.norm_sqr();
            if g.dim() == 2 {
                let o = 1 - axis;
                let ho = g.h(o);
                let (ox, oy) = if o == 0 { (1, 0) } else { (0, 1) };
                let ca = (w.at(ax + ox, ay + oy) - w.at(ax - ox, ay - oy)) / (2.0 * ho);
                let cb = (w.at(bx + ox, by + oy) - w.at(bx - ox, by - oy)) / (2.0 * ho);
                s += (0.5 * (ca + cb)).norm_sqr();
            }
            along.push(ga);
            sq.push(s);
        }
    }
    EdgeGrad { along, sq }
}

// -div of the edge fluxes `coeff(|∇w|²) ∂_axis w`.
fn neg_divergence<C: Fn(f64) -> f64>(w: &Field, coeff: C) -> Vec<Complex64> {
    let g = w.grid();
    let nx = g.n(0);
    let mut out = vec![ZERO; w.len()];
    for axis in 0..g.dim() {
        let eg = edge_gradients(w, axis);
        let flux: Vec<Complex64> =
            eg.along.iter().zip(&eg.sq).map(|(&ga, &s)| if s == 0.0 { ZERO } else { ga * coeff(s) }).collect();
        let h = g.h(axis);
        for (i, o) in out.iter_mut().enumerate() {
            let [ix, iy] = g.split(i);
            let (lo, hi) = if axis == 0 {
                let e = ix + (nx + 1) * iy;
                (e, e + 1)
            } else {
                let e = ix + nx * iy;
                (e, e + nx)
            };
            *o -= (flux[hi] - flux[lo]) / h;
        }
    }
    out
}

/// `-div(|∇(u^m)|^(p-2) ∇(u^m))` with signed powers.
pub(super) fn p_laplacian(u: &Field, p: f64, m: f64) -> Vec<Complex64> {
    let w = u.map(|v| signed_power(v, m));
    let half = 0.5 * (p - 2.0);
    neg_divergence(&w, |s| if p == 2.0 { 1.0 } else { s.powf(half) })
}

/// `-div(∇u / sqrt(1 + |∇u|²))`.
pub(super) fn mean_curvature(u: &Field) -> Vec<Complex64> {
    neg_divergence(u, |s| 1.0 / (1.0 + s).sqrt())
}

/// `-div(u ∇P)` with `P = K ⋆ u`, using the real part of `u`.
pub(super) fn porous_flux(grid: &Grid, riesz: &RieszTable, u: &Field) -> Vec<Complex64> {
    let re = u.real_parts();
    let pot = riesz.convolve_extended(&re);
    let (lo, di, up) = porous_rows(grid, &pot);
    let n = re.len();
    let mut out = vec![ZERO; n];
    if grid.dim() == 1 {
        for i in 0..n {
            let mut v = di[i] * re[i];
            if i > 0 {
                v += lo[i] * re[i - 1];
            }
            if i + 1 < n {
                v += up[i] * re[i + 1];
            }
            out[i] = Complex64::new(v, 0.0);
        }
        return out;
    }
    let nx = grid.n(0);
    let ex = nx + 2;
    let at = |ix: isize, iy: isize| u.at(ix, iy).re;
    for (i, o) in out.iter_mut().enumerate() {
        let [ix, iy] = grid.split(i);
        let k = (ix + 1) + ex * (iy + 1);
        let (ixs, iys) = (ix as isize, iy as isize);
        let c = re[i];
        let mut v = 0.0;
        for (axis, step, nb) in [
            (0, 1isize, at(ixs + 1, iys)),
            (0, -1, at(ixs - 1, iys)),
            (1, ex as isize, at(ixs, iys + 1)),
            (1, -(ex as isize), at(ixs, iys - 1)),
        ] {
            let h = grid.h(axis);
            let kn = (k as isize + step) as usize;
            // outward flux through this face
            v -= 0.5 * (c + nb) * (pot[kn] - pot[k]) / (h * h);
        }
        *o = Complex64::new(v, 0.0);
    }
    out
}

/// Rows of the 1D matrix `v ↦ -∂x(v ∂x P)` for a frozen potential given on
/// the extended grid (ghost nodes at both ends). Returns (sub, diag, super).
pub(crate) fn porous_rows(grid: &Grid, pot: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = grid.len();
    if grid.dim() != 1 {
        return (Vec::new(), Vec::new(), Vec::new());
    }
    let h2 = grid.h(0) * grid.h(0);
    let mut lo = vec![0.0; n];
    let mut di = vec![0.0; n];
    let mut up = vec![0.0; n];
    for i in 0..n {
        let k = i + 1;
        let qp = (pot[k + 1] - pot[k]) / h2;
        let qm = (pot[k] - pot[k - 1]) / h2;
        di[i] = -0.5 * (qp - qm);
        up[i] = -0.5 * qp;
        lo[i] = 0.5 * qm;
    }
    (lo, di, up)
}
