//! L1 discretization of the Caputo derivative on a uniform time grid.

use super::{CaputoNormalization, TimeDerivativeSpec};
use crate::error::{invalid, Result};
use num_complex::Complex64;
use statrs::function::gamma::gamma;

/// `b_m = (m+1)^(1-α) - m^(1-α)` for `m = 0..len`.
pub fn l1_weights(len: usize, alpha: f64) -> Vec<f64> {
    let e = 1.0 - alpha;
    (0..len).map(|m| ((m + 1) as f64).powf(e) - (m as f64).powf(e)).collect()
}

/// Factor in front of the L1 sum: `dt^(-α) / (1-α)`, divided by `Γ(1-α)` in the standard convention.
pub fn l1_coefficient(alpha: f64, dt: f64, norm: CaputoNormalization) -> f64 {
    let c = match norm {
        CaputoNormalization::Paper => 1.0,
        CaputoNormalization::Standard => 1.0 / gamma(1.0 - alpha),
    };
    c * dt.powf(-alpha) / (1.0 - alpha)
}

fn check(k: usize, alpha: f64) -> Result<()> {
    if k == 0 {
        return invalid("Caputo derivative needs at least two history values");
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("alpha must lie in (0,1), got {alpha}"));
    }
    Ok(())
}

/// Discrete Caputo derivative at the last time of `history` (values at `0, dt, ..., k dt`).
pub fn caputo_apply(history: &[f64], dt: f64, alpha: f64, norm: CaputoNormalization) -> Result<f64> {
    let k = history.len().saturating_sub(1);
    check(k, alpha)?;
    let b = l1_weights(k, alpha);
    let mut acc = 0.0;
    for j in 1..=k {
        acc += b[k - j] * (history[j] - history[j - 1]);
    }
    Ok(acc * l1_coefficient(alpha, dt, norm))
}

/// [`caputo_apply`] for complex histories.
pub fn caputo_apply_complex(
    history: &[Complex64],
    dt: f64,
    alpha: f64,
    norm: CaputoNormalization,
) -> Result<Complex64> {
    let k = history.len().saturating_sub(1);
    check(k, alpha)?;
    let b = l1_weights(k, alpha);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 1..=k {
        acc += (history[j] - history[j - 1]) * b[k - j];
    }
    Ok(acc * l1_coefficient(alpha, dt, norm))
}

/// Discrete `λ1 ∂t^α + λ2 ∂t` at every step `1..=k` of a scalar history.
///
/// Uses the same L1 and backward-difference weights as the field stepper.
pub fn mixed_derivative_series(history: &[f64], dt: f64, td: &TimeDerivativeSpec) -> Vec<f64> {
    let k = history.len().saturating_sub(1);
    let inc: Vec<f64> = history.windows(2).map(|w| w[1] - w[0]).collect();
    let (a_frac, b) = if td.lambda1 > 0.0 {
        (td.lambda1 * l1_coefficient(td.alpha, dt, td.normalization), l1_weights(k, td.alpha))
    } else {
        (0.0, Vec::new())
    };
    (1..=k)
        .map(|m| {
            let mut frac = 0.0;
            if a_frac != 0.0 {
                for j in 1..=m {
                    frac += b[m - j] * inc[j - 1];
                }
            }
            a_frac * frac + td.lambda2 * inc[m - 1] / dt
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_history_matches_closed_form() {
        let dt = 1e-3;
        let h: Vec<f64> = (0..=1000).map(|k| k as f64 * dt).collect();
        let p = caputo_apply(&h, dt, 0.5, CaputoNormalization::Paper).unwrap();
        assert!((p - 2.0).abs() < 1e-12, "{p}");
        let s = caputo_apply(&h, dt, 0.5, CaputoNormalization::Standard).unwrap();
        assert!((s - 2.0 / std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_history_and_errors() {
        let h = vec![3.0; 17];
        assert_eq!(caputo_apply(&h, 0.1, 0.3, CaputoNormalization::Paper).unwrap(), 0.0);
        assert!(caputo_apply(&[1.0], 0.1, 0.3, CaputoNormalization::Paper).is_err());
        assert!(caputo_apply(&[1.0, 2.0], 0.1, 1.0, CaputoNormalization::Paper).is_err());
    }

    #[test]
    fn caputo_is_linear_in_the_history() {
        let a: Vec<f64> = (0..50).map(|k| (k as f64 * 0.3).sin()).collect();
        let b: Vec<f64> = (0..50).map(|k| (k as f64).sqrt()).collect();
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - 0.5 * y).collect();
        let f = |h: &[f64]| caputo_apply(h, 0.05, 0.7, CaputoNormalization::Standard).unwrap();
        assert!((f(&mix) - (2.0 * f(&a) - 0.5 * f(&b))).abs() < 1e-12 * f(&mix).abs().max(1.0));
    }

    #[test]
    fn mixed_series_reduces_to_backward_difference() {
        let td = TimeDerivativeSpec::classical();
        let h = [1.0, 0.5, 0.25];
        assert_eq!(mixed_derivative_series(&h, 0.5, &td), vec![-1.0, -0.5]);
    }
}
