use crate::error::{invalid, Error, Result};
use crate::time::{l1_weights, mixed_derivative_series, TimeDerivativeSpec};

/// `(λ1 ∂t^α + λ2 ∂t) v = -k v^γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarOde {
    pub td: TimeDerivativeSpec,
    pub k: f64,
    pub gamma: f64,
}

impl ScalarOde {
    pub fn new(td: TimeDerivativeSpec, k: f64, gamma: f64) -> Result<Self> {
        td.validate()?;
        if !(k > 0.0 && k.is_finite()) {
            return invalid(format!("k must be positive, got {k}"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return invalid(format!("gamma must be positive, got {gamma}"));
        }
        Ok(Self { td, k, gamma })
    }

    /// Discrete residual `(λ1 ∂t^α + λ2 ∂t) x + k x^γ` at every step after the first node.
    pub fn residuals(&self, values: &[f64], dt: f64) -> Vec<f64> {
        mixed_derivative_series(values, dt, &self.td)
            .into_iter()
            .zip(&values[1..])
            .map(|(d, &x)| d + self.k * x.max(0.0).powf(self.gamma))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub ode: ScalarOde,
}

impl ScalarTrajectory {
    pub fn dt(&self) -> f64 {
        self.times.get(1).map_or(0.0, |t| t - self.times[0])
    }
}

pub(crate) fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return invalid(format!("dt must be positive, got {dt}"));
    }
    if !(t_final >= dt && t_final.is_finite()) {
        return invalid(format!("need dt <= T, got dt = {dt} and T = {t_final}"));
    }
    Ok((t_final / dt).round() as usize)
}

/// Solves `a0 v + k v^γ = rhs` for `v >= 0`; the left side is increasing in `v`.
fn implicit_root(a0: f64, k: f64, gamma: f64, rhs: f64) -> f64 {
    if rhs <= 0.0 {
        return 0.0;
    }
    let f = |v: f64| a0 * v + k * v.powf(gamma) - rhs;
    let (mut lo, mut hi) = (0.0, rhs / a0);
    let mut v = hi;
    for _ in 0..200 {
        let fv = f(v);
        if fv == 0.0 {
            break;
        }
        if fv > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let df = a0 + k * gamma * v.powf(gamma - 1.0);
        let newton = v - fv / df;
        let next = if df.is_finite() && newton >= lo && newton <= hi { newton } else { 0.5 * (lo + hi) };
        if (next - v).abs() <= 4.0 * f64::EPSILON * v {
            v = next;
            break;
        }
        v = next;
    }
    v
}

/// Fully implicit L1 / backward Euler solution on `0, dt, ..., T`.
///
/// Each step solves the scalar monotone equation exactly, so there is no
/// step-size restriction. Once the solution reaches 0 it stays there.
pub fn solve_scalar_ode(ode: &ScalarOde, v0: f64, t_final: f64, dt: f64) -> Result<ScalarTrajectory> {
    ScalarOde::new(ode.td, ode.k, ode.gamma)?;
    if !(v0 >= 0.0 && v0.is_finite()) {
        return invalid(format!("v0 must be nonnegative, got {v0}"));
    }
    let steps = step_count(t_final, dt)?;
    let td = &ode.td;
    let a_frac = td.fractional_weight(dt);
    let a0 = td.leading_weight(dt);
    let b = if td.has_memory() { l1_weights(steps + 1, td.alpha) } else { Vec::new() };
    let mut values = Vec::with_capacity(steps + 1);
    values.push(v0);
    let mut inc: Vec<f64> = Vec::with_capacity(steps);
    let mut dead = v0 == 0.0;
    for n in 0..steps {
        let vn = values[n];
        let next = if dead {
            0.0
        } else {
            // increments j = 1..=n enter with weights b_{n+1-j}
            let mut hist = 0.0;
            if a_frac != 0.0 {
                for (j, d) in inc.iter().enumerate() {
                    hist += b[n - j] * d;
                }
            }
            let v = implicit_root(a0, ode.k, ode.gamma, a0 * vn - a_frac * hist);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("scalar ODE at step {}", n + 1)));
            }
            v
        };
        if next == 0.0 {
            dead = true;
        }
        inc.push(next - vn);
        values.push(next);
    }
    let times = (0..=steps).map(|k| k as f64 * dt).collect();
    Ok(ScalarTrajectory { times, values, ode: *ode })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// The discrete residual of `w` is `>= -tol` at every node.
    pub is_super: bool,
    /// The discrete residual of `v` is `<= tol` at every node.
    pub is_sub: bool,
    /// `w(0) > v(0)`.
    pub hypothesis: bool,
    /// The hypothesis holds and `w > v` at every node.
    pub ordered: bool,
    pub tolerance: f64,
    pub worst_super_residual: f64,
    pub worst_sub_residual: f64,
    pub min_gap: f64,
}

/// Discrete version of the comparison lemmas.
///
/// Residual signs are checked up to `5 dt^min(1, 2-α)`, the consistency
/// order of the L1 scheme.
pub fn check_comparison(w: &ScalarTrajectory, v: &ScalarTrajectory, ode: &ScalarOde) -> Result<ComparisonReport> {
    if w.times.len() != v.times.len() || w.times.len() < 2 {
        return Err(Error::Dimension(format!(
            "trajectories have {} and {} nodes",
            w.times.len(),
            v.times.len()
        )));
    }
    let dt = w.dt();
    let uniform = |t: &[f64]| t.iter().enumerate().all(|(k, &x)| (x - k as f64 * dt).abs() <= 1e-9 * dt.max(x));
    if w.times.iter().zip(&v.times).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0)) || !uniform(&w.times) {
        return Err(Error::Dimension("trajectories must share one uniform time grid".into()));
    }
    let order = if ode.td.has_memory() { f64::min(1.0, 2.0 - ode.td.alpha) } else { 1.0 };
    let tolerance = 5.0 * dt.powf(order);
    let rw = ode.residuals(&w.values, dt);
    let rv = ode.residuals(&v.values, dt);
    let worst_super_residual = rw.iter().copied().fold(f64::INFINITY, f64::min);
    let worst_sub_residual = rv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let hypothesis = w.values[0] > v.values[0];
    let min_gap = w.values.iter().zip(&v.values).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min);
    Ok(ComparisonReport {
        is_super: worst_super_residual >= -tolerance,
        is_sub: worst_sub_residual <= tolerance,
        hypothesis,
        ordered: hypothesis && min_gap > 0.0,
        tolerance,
        worst_super_residual,
        worst_sub_residual,
        min_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barriers::{mittag_leffler, BarrierSpec};
    use crate::time::CaputoNormalization;

    #[test]
    fn classical_linear_ode_is_exponential() {
        let ode = ScalarOde::new(TimeDerivativeSpec::classical(), 1.0, 1.0).unwrap();
        let tr = solve_scalar_ode(&ode, 1.0, 5.0, 1e-4).unwrap();
        for (t, v) in tr.times.iter().zip(&tr.values) {
            assert!((v - (-t).exp()).abs() < 1e-4);
        }
    }

    #[test]
    fn caputo_linear_ode_matches_mittag_leffler() {
        let ode = ScalarOde::new(TimeDerivativeSpec::caputo(0.5), 1.0, 1.0).unwrap();
        let tr = solve_scalar_ode(&ode, 1.0, 5.0, 1e-3).unwrap();
        for (t, v) in tr.times.iter().zip(&tr.values).skip(100) {
            let want = mittag_leffler(0.5, -t.sqrt()).unwrap();
            assert!((v / want - 1.0).abs() < 0.02, "t={t}: {v} vs {want}");
        }
    }

    #[test]
    fn zero_data_and_extinction_stay_zero() {
        let ode = ScalarOde::new(TimeDerivativeSpec::classical(), 1.0, 0.5).unwrap();
        let tr = solve_scalar_ode(&ode, 0.0, 1.0, 0.01).unwrap();
        assert!(tr.values.iter().all(|&v| v == 0.0));
        // v' = -sqrt(v) reaches 0 at t = 2 sqrt(v0); the implicit step collapses right after
        let tr = solve_scalar_ode(&ode, 0.25, 3.0, 1e-3).unwrap();
        let hit = tr.values.iter().position(|&v| v < 1e-10).unwrap();
        assert!((tr.times[hit] - 1.0).abs() < 0.01, "{}", tr.times[hit]);
        assert!(tr.values[hit..].iter().all(|&v| v < 1e-10));
        let ode = ScalarOde::new(TimeDerivativeSpec::caputo(0.5), 1.0, 1.0).unwrap();
        let tr = solve_scalar_ode(&ode, 0.0, 1.0, 0.01).unwrap();
        assert!(tr.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn implicit_root_solves_the_step_equation() {
        for (a0, k, g, r) in [(10.0, 1.0, 2.0, 3.0), (1e3, 5.0, 0.3, 1e-6), (1.0, 1.0, 5.0, 100.0)] {
            let v = implicit_root(a0, k, g, r);
            assert!((a0 * v + k * v.powf(g) - r).abs() < 1e-12 * r);
        }
    }

    #[test]
    fn barrier_dominates_mixed_solution() {
        let td = TimeDerivativeSpec::new(0.5, 0.5, 0.5, CaputoNormalization::Standard).unwrap();
        let ode = ScalarOde::new(td, 1.0, 2.0).unwrap();
        let b = BarrierSpec::mixed(1.0, 1.0, 2.0, 0.5).unwrap();
        let w = b.trajectory(ode, 20.0, 0.01).unwrap();
        let v = solve_scalar_ode(&ode, 0.9, 20.0, 0.01).unwrap();
        let rep = check_comparison(&w, &v, &ode).unwrap();
        assert!(rep.is_super && rep.is_sub && rep.ordered, "{rep:?}");
    }

    #[test]
    fn shifted_solution_is_a_strict_supersolution() {
        let ode = ScalarOde::new(TimeDerivativeSpec::classical(), 1.0, 1.0).unwrap();
        let v = solve_scalar_ode(&ode, 1.0, 3.0, 1e-3).unwrap();
        let mut w = v.clone();
        w.values.iter_mut().for_each(|x| *x += 0.1);
        let rep = check_comparison(&w, &v, &ode).unwrap();
        assert!(rep.is_super && rep.worst_super_residual > 0.09 && rep.ordered);
        let rep = check_comparison(&v, &w, &ode).unwrap();
        assert!(!rep.hypothesis && !rep.ordered);
    }

    #[test]
    fn caputo_of_a_vanished_solution_is_nonpositive() {
        let td = TimeDerivativeSpec::caputo(0.4);
        let mut h: Vec<f64> = (0..50).map(|k| 1.0 - 0.02 * k as f64).collect();
        h.push(0.0);
        let d = mixed_derivative_series(&h, 0.1, &td);
        assert!(*d.last().unwrap() <= 0.0);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let ode = ScalarOde::new(TimeDerivativeSpec::classical(), 1.0, 1.0).unwrap();
        let a = solve_scalar_ode(&ode, 1.0, 1.0, 0.1).unwrap();
        let b = solve_scalar_ode(&ode, 1.0, 2.0, 0.1).unwrap();
        assert!(check_comparison(&a, &b, &ode).is_err());
    }
}
