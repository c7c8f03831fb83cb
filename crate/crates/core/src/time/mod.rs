//! Time discretization of `(λ1 ∂t^α + λ2 ∂t) u + N[u] = 0`.

mod caputo;
mod simulate;
mod stepper;

pub use caputo::{caputo_apply, caputo_apply_complex, l1_coefficient, l1_weights, mixed_derivative_series};
pub use simulate::{simulate, BlowUp, NormTrace, SimulationConfig};
pub use stepper::{Scheme, SolverKind, Stepper};

use crate::error::{invalid, Error, Result};
use std::str::FromStr;

/// Which Caputo constant is used.
///
/// `Paper` is `∫ u'(τ) (t-τ)^(-α) dτ`; `Standard` divides that by `Γ(1-α)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CaputoNormalization {
    Paper,
    #[default]
    Standard,
}

impl FromStr for CaputoNormalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::Paper),
            "standard" => Ok(Self::Standard),
            other => invalid(format!("unknown Caputo normalization '{other}' (paper|standard)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDerivativeSpec {
    pub lambda1: f64,
    pub lambda2: f64,
    pub alpha: f64,
    pub normalization: CaputoNormalization,
}

impl TimeDerivativeSpec {
    pub fn new(lambda1: f64, lambda2: f64, alpha: f64, normalization: CaputoNormalization) -> Result<Self> {
        let td = Self { lambda1, lambda2, alpha, normalization };
        td.validate()?;
        Ok(td)
    }

    /// `∂t` alone.
    pub fn classical() -> Self {
        Self { lambda1: 0.0, lambda2: 1.0, alpha: 0.5, normalization: CaputoNormalization::Standard }
    }

    /// `∂t^α` alone, standard normalization.
    pub fn caputo(alpha: f64) -> Self {
        Self { lambda1: 1.0, lambda2: 0.0, alpha, normalization: CaputoNormalization::Standard }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
            return invalid(format!(
                "lambda1 and lambda2 must be nonnegative, got {} and {}",
                self.lambda1, self.lambda2
            ));
        }
        if (self.lambda1 + self.lambda2 - 1.0).abs() > 1e-12 {
            return invalid(format!(
                "lambda1 + lambda2 must equal 1, got {} + {} = {}",
                self.lambda1,
                self.lambda2,
                self.lambda1 + self.lambda2
            ));
        }
        if self.lambda1 > 0.0 && !(self.alpha > 0.0 && self.alpha < 1.0) {
            return invalid(format!("alpha must lie in (0,1), got {}", self.alpha));
        }
        Ok(())
    }

    pub fn has_memory(&self) -> bool {
        self.lambda1 > 0.0
    }

    /// `λ1 × L1 coefficient`, the weight of the newest increment in the Caputo part.
    pub fn fractional_weight(&self, dt: f64) -> f64 {
        if self.has_memory() {
            self.lambda1 * l1_coefficient(self.alpha, dt, self.normalization)
        } else {
            0.0
        }
    }

    /// Total weight of the newest increment: `λ1 c dt^(-α)/(1-α) + λ2/dt`.
    pub fn leading_weight(&self, dt: f64) -> f64 {
        self.fractional_weight(dt) + self.lambda2 / dt
    }
}
