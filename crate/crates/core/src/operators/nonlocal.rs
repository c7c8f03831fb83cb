//! Pairwise sums for the integral operators.

use super::curvature::CurvatureProfile;
use super::kernel::{polar_over_rect, union_rect, AxisTable, PairTable};
use super::VectorPotential;
use crate::grid::Grid;
use crate::par;
use num_complex::Complex64;

#[inline]
fn phi(z: Complex64, p: f64) -> Complex64 {
    if p == 2.0 {
        return z;
    }
    let r = z.norm();
    if r == 0.0 {
        z
    } else {
        z * r.powf(p - 2.0)
    }
}

/// `scale (Σ_j w_ij φ_p(u_i - u_j) + τ_i φ_p(u_i))` with `φ_p(z) = |z|^(p-2) z`.
pub(super) fn power_pairs(table: &PairTable, u: &[Complex64], p: f64, scale: f64) -> Vec<Complex64> {
    let g = *table.grid();
    let tail = table.tail();
    let nx = g.n(0);
    par::map_range(u.len(), |i| {
        let ui = u[i];
        let [ix, iy] = g.split(i);
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &uj) in u.iter().enumerate() {
            if j == i {
                continue;
            }
            let w = table.weight_by_offset(ix.abs_diff(j % nx), iy.abs_diff(j / nx));
            acc += phi(ui - uj, p) * w;
        }
        (acc + phi(ui, p) * tail[i]) * scale
    })
}

/// `Σ_axis β_a` times the 1D fractional Laplacian along that axis, line by line.
pub(super) fn anisotropic(grid: &Grid, axes: &[(AxisTable, f64)], u: &[Complex64]) -> Vec<Complex64> {
    let nx = grid.n(0);
    let g = *grid;
    par::map_range(u.len(), |i| {
        let [ix, iy] = g.split(i);
        let ui = u[i];
        let mut total = Complex64::new(0.0, 0.0);
        for (t, beta) in axes {
            let (pos, len) = if t.axis == 0 { (ix, nx) } else { (iy, g.n(1)) };
            let mut acc = ui * t.tail[pos];
            for k in 0..len {
                if k == pos {
                    continue;
                }
                let j = if t.axis == 0 { k + nx * iy } else { ix + nx * k };
                acc += (ui - u[j]) * t.w[pos.abs_diff(k)];
            }
            total += acc * *beta;
        }
        total
    })
}

/// `scale (Σ_j w_ij (u_i - e^{i (x_i - x_j)·A(mid)} u_j) + τ_i u_i)`.
pub(super) fn magnetic_pairs(
    table: &PairTable,
    u: &[Complex64],
    a: &VectorPotential,
    scale: f64,
) -> Vec<Complex64> {
    let g = *table.grid();
    let tail = table.tail();
    let nx = g.n(0);
    par::map_range(u.len(), |i| {
        let xi = g.coords(i);
        let [ix, iy] = g.split(i);
        let ui = u[i];
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &uj) in u.iter().enumerate() {
            if j == i {
                continue;
            }
            let xj = g.coords(j);
            let av = a.eval([0.5 * (xi[0] + xj[0]), 0.5 * (xi[1] + xj[1])]);
            let th = (xi[0] - xj[0]) * av[0] + (xi[1] - xj[1]) * av[1];
            let w = table.weight_by_offset(ix.abs_diff(j % nx), iy.abs_diff(j / nx));
            acc += (ui - Complex64::from_polar(1.0, th) * uj) * w;
        }
        (acc + ui * tail[i]) * scale
    })
}

/// `Σ_j w_ij d_ij G((u_i - u_j)/d_ij)`, `d_ij = |x_i - x_j|`, plus the exterior contribution, on real parts.
pub(super) fn fractional_mean_curvature(
    table: &PairTable,
    profile: &CurvatureProfile,
    sigma: f64,
    u: &[Complex64],
) -> Vec<Complex64> {
    let g = *table.grid();
    let nx = g.n(0);
    let re: Vec<f64> = u.iter().map(|v| v.re).collect();
    let rect = union_rect(&g);
    par::map_range(u.len(), |i| {
        let [ix, iy] = g.split(i);
        let xi = g.coords(i);
        let ui = re[i];
        let mut acc = 0.0;
        for (j, &uj) in re.iter().enumerate() {
            if j == i {
                continue;
            }
            let (dx, dy) = (ix.abs_diff(j % nx), iy.abs_diff(j / nx));
            let dist = ((dx as f64 * g.h(0)).powi(2) + (dy as f64 * g.h(1)).powi(2)).sqrt();
            acc += table.weight_by_offset(dx, dy) * dist * profile.g((ui - uj) / dist);
        }
        let tail = if ui == 0.0 {
            0.0
        } else if g.dim() == 1 {
            let h = g.h(0);
            let dl = xi[0] - g.lo(0) - 0.5 * h;
            let dr = g.hi(0) - 0.5 * h - xi[0];
            dl.powf(-sigma) * profile.gq(ui / dl) + dr.powf(-sigma) * profile.gq(ui / dr)
        } else {
            polar_over_rect(xi, rect, 2, |_, rho| rho.powf(-sigma) * profile.gq(ui / rho))
        };
        Complex64::new(acc + tail, 0.0)
    })
}
