//! One-step advance of the L1 / backward-Euler discretization.
//!
//! With `a0 = λ1 c dt^(-α)/(1-α) + λ2/dt` and `a_f = λ1 c dt^(-α)/(1-α)`, step
//! `k -> k+1` solves
//!
//! ```text
//! a0 (u_{k+1} - u_k) + a_f H_k + N[u_{k+1} or u_k] = 0,   H_k = Σ_{j=1..k} b_{k+1-j} Δu_j
//! ```
//!
//! Linear operators are taken implicitly (tridiagonal or spectral solve),
//! Kirchhoff operators implicitly with their prefactor frozen at `t_k`,
//! the 1D porous medium II operator implicitly in the pressure with the
//! mobility `u` frozen at `t_k` (a dense solve), and everything else
//! explicitly.

use super::{l1_weights, TimeDerivativeSpec};
use crate::error::{invalid, Error, Result};
use crate::grid::Field;
use crate::operators::{DiscreteOperator, DiffusionOperator, Linearity};
use crate::par;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use std::str::FromStr;

const CHUNK: usize = 64;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Requested treatment of `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Implicit where a linear solve is available, explicit otherwise.
    #[default]
    Auto,
    Explicit,
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "explicit" => Ok(Self::Explicit),
            other => invalid(format!("unknown scheme '{other}' (auto|explicit)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Tridiagonal,
    ScaledTridiagonal,
    Spectral,
    ScaledSpectral,
    FrozenMobility,
    Explicit,
}

#[derive(Debug, Clone)]
enum Solver {
    Tri { lo: Vec<Complex64>, di: Vec<Complex64>, up: Vec<Complex64>, scaled: bool },
    Spectral { v: DMatrix<Complex64>, lam: Vec<f64>, scaled: bool },
    /// Riesz potential on the extended grid as an `(n+2) × n` matrix.
    FrozenMobility { rext: DMatrix<f64> },
    Explicit,
}

#[derive(Debug, Clone)]
pub struct Stepper {
    op: DiscreteOperator,
    td: TimeDerivativeSpec,
    dt: f64,
    a_frac: f64,
    a0: f64,
    b: Vec<f64>,
    inc: Vec<Complex64>,
    steps: usize,
    u: Field,
    solver: Solver,
}

impl Stepper {
    /// Sets up the solver; explicit treatment must satisfy `1/a0 <= c_stab h^order`.
    pub fn new(op: DiscreteOperator, td: TimeDerivativeSpec, dt: f64, u0: Field, scheme: Scheme, c_stab: f64) -> Result<Self> {
        td.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return invalid(format!("dt must be positive, got {dt}"));
        }
        if u0.grid() != op.grid() {
            return Err(Error::Dimension("initial field grid differs from operator grid".into()));
        }
        if !u0.is_finite() {
            return Err(Error::NonFinite("initial field".into()));
        }
        let solver = if scheme == Scheme::Explicit { Solver::Explicit } else { pick_solver(&op)? };
        let a_frac = td.fractional_weight(dt);
        let a0 = td.leading_weight(dt);
        if matches!(solver, Solver::Explicit) {
            let order = op.op().order();
            let bound = c_stab * op.grid().h_min().powf(order);
            if 1.0 / a0 > bound {
                return Err(Error::Stability(format!(
                    "explicit step for {} needs effective step 1/a0 = {:.3e} <= c_stab h^{order} = {:.3e} (dt = {dt})",
                    op.op().name(),
                    1.0 / a0,
                    bound
                )));
            }
        }
        Ok(Self { op, td, dt, a_frac, a0, b: vec![1.0], inc: Vec::new(), steps: 0, u: u0, solver })
    }

    pub fn state(&self) -> &Field {
        &self.u
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn operator(&self) -> &DiscreteOperator {
        &self.op
    }

    pub fn spec(&self) -> &TimeDerivativeSpec {
        &self.td
    }

    pub fn solver_kind(&self) -> SolverKind {
        match &self.solver {
            Solver::Tri { scaled: false, .. } => SolverKind::Tridiagonal,
            Solver::Tri { scaled: true, .. } => SolverKind::ScaledTridiagonal,
            Solver::Spectral { scaled: false, .. } => SolverKind::Spectral,
            Solver::Spectral { scaled: true, .. } => SolverKind::ScaledSpectral,
            Solver::FrozenMobility { .. } => SolverKind::FrozenMobility,
            Solver::Explicit => SolverKind::Explicit,
        }
    }

    // H_k, chunked over nodes with a fixed summation order in j
    fn history(&mut self) -> Vec<Complex64> {
        let n = self.u.len();
        let k = self.steps;
        if k == 0 || self.a_frac == 0.0 {
            return vec![ZERO; n];
        }
        if self.b.len() < k + 1 {
            self.b = l1_weights(2 * (k + 1), self.td.alpha);
        }
        let b = &self.b;
        let inc = &self.inc;
        let parts = par::map_range(n.div_ceil(CHUNK), |c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let mut acc = vec![ZERO; hi - lo];
            for j in 1..=k {
                let w = b[k + 1 - j];
                let row = &inc[(j - 1) * n + lo..(j - 1) * n + hi];
                for (a, r) in acc.iter_mut().zip(row) {
                    *a += r * w;
                }
            }
            acc
        });
        parts.concat()
    }

    /// Advances one step and returns the new state.
    pub fn step(&mut self) -> Result<&Field> {
        let hist = self.history();
        let uk = self.u.values();
        let rhs: Vec<Complex64> = uk.iter().zip(&hist).map(|(u, h)| u * self.a0 - h * self.a_frac).collect();
        let grid = *self.u.grid();
        let next: Vec<Complex64> = match &self.solver {
            Solver::Explicit => {
                let nu = self.op.apply(&self.u)?;
                rhs.iter().zip(nu.values()).map(|(r, n)| (r - n) / self.a0).collect()
            }
            Solver::Tri { lo, di, up, scaled } => {
                let m = if *scaled { self.op.prefactor(&self.u) } else { 1.0 };
                let d: Vec<Complex64> = di.iter().map(|v| v * m + self.a0).collect();
                let l: Vec<Complex64> = lo.iter().map(|v| v * m).collect();
                let u: Vec<Complex64> = up.iter().map(|v| v * m).collect();
                thomas(&l, &d, &u, &rhs)?
            }
            Solver::Spectral { v, lam, scaled } => {
                let m = if *scaled { self.op.prefactor(&self.u) } else { 1.0 };
                let r = DVector::from_vec(rhs);
                let mut c = v.ad_mul(&r);
                for (ci, l) in c.iter_mut().zip(lam) {
                    *ci /= self.a0 + m * l;
                }
                (v * c).iter().copied().collect()
            }
            Solver::FrozenMobility { rext } => {
                let mut m = mobility_matrix(grid.h(0), rext, &self.u.real_parts());
                for i in 0..m.nrows() {
                    m[(i, i)] += self.a0;
                }
                let lu = m.lu();
                let re = DVector::from_iterator(rhs.len(), rhs.iter().map(|z| z.re));
                let x = lu.solve(&re).ok_or_else(|| Error::Singular("porous medium step matrix".into()))?;
                if rhs.iter().any(|z| z.im != 0.0) {
                    let im = DVector::from_iterator(rhs.len(), rhs.iter().map(|z| z.im));
                    let y = lu.solve(&im).ok_or_else(|| Error::Singular("porous medium step matrix".into()))?;
                    x.iter().zip(y.iter()).map(|(&a, &b)| Complex64::new(a, b)).collect()
                } else {
                    x.iter().map(|&a| Complex64::new(a, 0.0)).collect()
                }
            }
        };
        let new = Field::new(grid, next)?;
        if !new.is_finite() {
            return Err(Error::NonFinite(format!("state at step {}", self.steps + 1)));
        }
        self.inc.extend(new.values().iter().zip(self.u.values()).map(|(a, b)| a - b));
        self.u = new;
        self.steps += 1;
        Ok(&self.u)
    }
}

fn pick_solver(op: &DiscreteOperator) -> Result<Solver> {
    let grid = op.grid();
    if matches!(op.op(), DiffusionOperator::PorousMediumII { .. }) && grid.dim() == 1 {
        let riesz = op.riesz().expect("porous operator carries a Riesz table");
        let n = grid.len();
        let rext = DMatrix::from_fn(n + 2, n, |k, j| riesz.weight(k.abs_diff(j + 1), 0));
        return Ok(Solver::FrozenMobility { rext });
    }
    let lin = op.op().linearity();
    if lin == Linearity::Nonlinear {
        return Ok(Solver::Explicit);
    }
    let scaled = lin == Linearity::ScaledLinear;
    let base = op.linear_base().expect("linear operators have a base");
    if let Some([lo, di, up]) = base.tridiagonal() {
        return Ok(Solver::Tri { lo, di, up, scaled });
    }
    let m = base.dense_matrix()?;
    let eig = SymmetricEigen::new(m);
    let lam: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if lam.iter().any(|l| !l.is_finite()) {
        return Err(Error::Singular(format!("eigen-decomposition of {} failed", op.op().name())));
    }
    Ok(Solver::Spectral { v: eig.eigenvectors, lam, scaled })
}

/// Matrix of `v ↦ -∂x(m ∂x I v)` with face mobilities `m = max(0, (u_i + u_{i+1})/2)`
/// and `I v = rext v` the Riesz potential including the ghost nodes.
fn mobility_matrix(h: f64, rext: &DMatrix<f64>, u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let h2 = h * h;
    let at = |i: isize| if i < 0 || i >= n as isize { 0.0 } else { u[i as usize] };
    DMatrix::from_fn(n, n, |i, j| {
        let ii = i as isize;
        let mp = (0.5 * (at(ii) + at(ii + 1))).max(0.0);
        let mm = (0.5 * (at(ii - 1) + at(ii))).max(0.0);
        let k = i + 1;
        -(mp * (rext[(k + 1, j)] - rext[(k, j)]) - mm * (rext[(k, j)] - rext[(k - 1, j)])) / h2
    })
}

/// Thomas algorithm for a tridiagonal system; `lo[0]` and `up[n-1]` are ignored.
pub(crate) fn thomas(lo: &[Complex64], di: &[Complex64], up: &[Complex64], rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = di.len();
    let mut c = vec![ZERO; n];
    let mut d = vec![ZERO; n];
    let mut piv = di[0];
    if piv.norm() == 0.0 {
        return Err(Error::Singular("zero pivot in tridiagonal solve".into()));
    }
    c[0] = if n > 1 { up[0] / piv } else { ZERO };
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = di[i] - lo[i] * c[i - 1];
        if piv.norm() == 0.0 || !piv.norm().is_finite() {
            return Err(Error::Singular(format!("zero pivot in tridiagonal solve at row {i}")));
        }
        c[i] = if i + 1 < n { up[i] / piv } else { ZERO };
        d[i] = (rhs[i] - lo[i] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] = d[i] - c[i] * d[i + 1];
    }
    Ok(d)
}
