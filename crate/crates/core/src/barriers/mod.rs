//! Scalar side of the decay theory: Mittag-Leffler values, explicit
//! supersolution barriers, a scalar mixed-derivative ODE solver and
//! discrete comparison checks.

mod ode;

pub use ode::{check_comparison, solve_scalar_ode, ComparisonReport, ScalarOde, ScalarTrajectory};

use crate::error::{invalid, Result};
use crate::quadrature::adaptive_simpson;
use crate::time::CaputoNormalization;
use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::PI;

/// Largest series term magnitude accepted before switching to the integral form.
const SERIES_TERM_LIMIT: f64 = 1e3;

/// `E_α(x) = Σ x^k / Γ(αk + 1)` for `α ∈ (0, 1]` and `x <= 0`.
pub fn mittag_leffler(alpha: f64, x: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return invalid(format!("alpha must lie in (0,1], got {alpha}"));
    }
    if !(x <= 0.0) {
        return invalid(format!("Mittag-Leffler argument must be <= 0, got {x}"));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if alpha == 1.0 {
        return Ok(x.exp());
    }
    if max_series_term(alpha, -x) <= SERIES_TERM_LIMIT {
        Ok(ml_series(alpha, x))
    } else {
        Ok(ml_integral(alpha, -x))
    }
}

fn max_series_term(alpha: f64, s: f64) -> f64 {
    let ls = s.ln();
    let mut best = f64::NEG_INFINITY;
    for k in 0..2000 {
        let l = k as f64 * ls - ln_gamma(alpha * k as f64 + 1.0);
        best = best.max(l);
        if k > 10 && l < best - 40.0 {
            break;
        }
    }
    best.exp()
}

fn ml_series(alpha: f64, x: f64) -> f64 {
    let (s, sign) = (-x, -1.0f64);
    let ls = s.ln();
    let mut acc = 0.0;
    for k in 0..2000 {
        let kf = k as f64;
        let term = sign.powi(k) * (kf * ls - ln_gamma(alpha * kf + 1.0)).exp();
        acc += term;
        if k > 5 && term.abs() < 1e-17 * acc.abs().max(1e-300) {
            break;
        }
    }
    acc
}

/// `E_α(-s) = sin(απ)/(απ) ∫₀^∞ exp(-s^(1/α) y^(1/α)) / (y² + 2y cos(απ) + 1) dy`.
fn ml_integral(alpha: f64, s: f64) -> f64 {
    let t = s.powf(1.0 / alpha);
    let c = (alpha * PI).cos();
    let f = |y: f64| (-(t * y.powf(1.0 / alpha))).exp() / (y * y + 2.0 * y * c + 1.0);
    // beyond y_max the exponential factor is below e^-60
    let y_max = (60.0 / t).powf(alpha);
    let mut acc = 0.0;
    let mut a = 0.0;
    for b in [0.5, 1.0, 2.0] {
        if b >= y_max {
            break;
        }
        acc += adaptive_simpson(&f, a, b, 1e-14);
        a = b;
    }
    acc += adaptive_simpson(&f, a, y_max.max(a), 1e-14);
    (alpha * PI).sin() / (alpha * PI) * acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierKind {
    /// `u0` up to `t0`, then `K t^(-α/γ)`.
    MixedVz15,
    /// `γ <= 1`: closed-form solution of `w' = -w^γ/C` until `t0`, exponential after.
    ClassicalExp,
    /// `γ > 1`: constant up to `t = 1`, then `w0 t^(-1/(γ-1))`.
    ClassicalPower,
}

impl std::str::FromStr for BarrierKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mixed_vz15" => Ok(Self::MixedVz15),
            "classical_exp" => Ok(Self::ClassicalExp),
            "classical_power" => Ok(Self::ClassicalPower),
            other => invalid(format!("unknown barrier kind '{other}' (mixed_vz15|classical_exp|classical_power)")),
        }
    }
}

impl std::fmt::Display for BarrierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::MixedVz15 => "mixed_vz15",
            Self::ClassicalExp => "classical_exp",
            Self::ClassicalPower => "classical_power",
        })
    }
}

/// A supersolution of `(λ1 ∂t^α + λ2 ∂t) w = -ν w^γ` with its derived constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSpec {
    pub kind: BarrierKind,
    pub u0: f64,
    pub nu: f64,
    pub gamma: f64,
    pub alpha: f64,
    /// Switch time between the two pieces.
    pub t0: f64,
    /// `K` of the power tail (mixed), or `w0` of the classical barriers.
    pub k: f64,
    /// Value at `t0` of the classical exponential barrier.
    pub theta0: f64,
}

impl BarrierSpec {
    /// Barrier for the mixed equation, built for the standard Caputo normalization.
    pub fn mixed(u0: f64, nu: f64, gamma: f64, alpha: f64) -> Result<Self> {
        Self::mixed_with(u0, nu, gamma, alpha, CaputoNormalization::Standard)
    }

    /// Barrier for the mixed equation under either Caputo normalization.
    ///
    /// With the unnormalized derivative the equation is the standard one with
    /// `ν / Γ(1-α)`, which is what the barrier is built from.
    pub fn mixed_with(u0: f64, nu: f64, gamma_: f64, alpha: f64, norm: CaputoNormalization) -> Result<Self> {
        check_common(u0, nu, gamma_)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return invalid(format!("alpha must lie in (0,1), got {alpha}"));
        }
        let nu = match norm {
            CaputoNormalization::Standard => nu,
            CaputoNormalization::Paper => nu / gamma(1.0 - alpha),
        };
        let q = alpha / gamma_;
        let base = u0.powf(1.0 - gamma_) / nu;
        let caputo_bound =
            base * (2f64.powf(alpha) / gamma(1.0 - alpha) + q * 2f64.powf(alpha + q) / gamma(2.0 - alpha));
        let t0 = caputo_bound.max(1.0).max(q * base);
        Ok(Self {
            kind: BarrierKind::MixedVz15,
            u0,
            nu,
            gamma: gamma_,
            alpha,
            t0,
            k: u0 * t0.powf(q),
            theta0: u0,
        })
    }

    /// Barrier for `w' = -ν w^γ` with `w(0) >= u0`; the kind follows from `γ`.
    pub fn classical(u0: f64, nu: f64, gamma_: f64) -> Result<Self> {
        check_common(u0, nu, gamma_)?;
        let c = 1.0 / nu;
        if gamma_ <= 1.0 {
            let (t0, theta0) = if gamma_ == 1.0 {
                (0.0, u0)
            } else {
                let e = 1.0 - gamma_;
                let t0 = f64::max(0.0, c / e * (u0.powf(e) - 1.0));
                (t0, (u0.powf(e) - e * t0 / c).max(0.0).powf(1.0 / e))
            };
            Ok(Self { kind: BarrierKind::ClassicalExp, u0, nu, gamma: gamma_, alpha: 1.0, t0, k: u0, theta0 })
        } else {
            let w0 = u0.max((c / (gamma_ - 1.0)).powf(1.0 / (gamma_ - 1.0)));
            Ok(Self { kind: BarrierKind::ClassicalPower, u0, nu, gamma: gamma_, alpha: 1.0, t0: 1.0, k: w0, theta0: w0 })
        }
    }

    /// The classical barrier when `λ1 = 0`, the mixed one otherwise.
    pub fn for_equation(u0: f64, nu: f64, gamma_: f64, td: &crate::time::TimeDerivativeSpec) -> Result<Self> {
        if td.has_memory() {
            Self::mixed_with(u0, nu, gamma_, td.alpha, td.normalization)
        } else {
            Self::classical(u0, nu, gamma_)
        }
    }

    /// `w(t)`; continuous and nonincreasing on `t >= 0`.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self.kind {
            BarrierKind::MixedVz15 => {
                if t <= self.t0 {
                    self.u0
                } else {
                    self.k * t.powf(-self.alpha / self.gamma)
                }
            }
            BarrierKind::ClassicalExp => {
                let c = 1.0 / self.nu;
                if t <= self.t0 {
                    if self.gamma == 1.0 {
                        return self.u0;
                    }
                    let e = 1.0 - self.gamma;
                    (self.u0.powf(e) - e * t / c).max(0.0).powf(1.0 / e)
                } else {
                    self.theta0 * ((self.t0 - t) / c).exp()
                }
            }
            BarrierKind::ClassicalPower => {
                if t <= 1.0 {
                    self.k
                } else {
                    self.k * t.powf(-1.0 / (self.gamma - 1.0))
                }
            }
        }
    }

    /// Samples `w` on the uniform grid `0, dt, ..., T`.
    pub fn trajectory(&self, ode: ScalarOde, t_final: f64, dt: f64) -> Result<ScalarTrajectory> {
        let steps = ode::step_count(t_final, dt)?;
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        let values = times.iter().map(|&t| self.eval(t)).collect();
        Ok(ScalarTrajectory { times, values, ode })
    }
}

/// `w(t)` of `spec`.
pub fn barrier_eval(spec: &BarrierSpec, t: f64) -> f64 {
    spec.eval(t)
}

fn check_common(u0: f64, nu: f64, gamma_: f64) -> Result<()> {
    if !(u0 > 0.0 && u0.is_finite()) {
        return invalid(format!("u0 must be positive, got {u0}"));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return invalid(format!("nu must be positive, got {nu}"));
    }
    if !(gamma_ > 0.0 && gamma_.is_finite()) {
        return invalid(format!("gamma must be positive, got {gamma_}"));
    }
    Ok(())
}
