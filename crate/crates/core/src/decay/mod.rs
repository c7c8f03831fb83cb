//! Decay laws: what the theorems predict for an operator, least-squares fits
//! of recorded norm traces, and checks of the predicted upper bounds.

use crate::error::{invalid, Error, Result};
use crate::operators::DiffusionOperator;
use crate::time::{mixed_derivative_series, NormTrace, TimeDerivativeSpec};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayKind {
    Polynomial,
    Exponential,
}

impl fmt::Display for DecayKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Polynomial => "polynomial",
            Self::Exponential => "exponential",
        })
    }
}

impl std::str::FromStr for DecayKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "polynomial" => Ok(Self::Polynomial),
            "exponential" => Ok(Self::Exponential),
            other => invalid(format!("unknown decay kind '{other}'")),
        }
    }
}

/// `Θ(t) = 1/(1 + t^p)` or `Θ(t) = exp(-r t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayLaw {
    Polynomial { exponent: f64 },
    /// The theorems give `r = 1/C` with an existential `C`; `None` until estimated.
    Exponential { rate: Option<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictedDecay {
    pub law: DecayLaw,
    pub gamma: f64,
    pub source: String,
}

impl PredictedDecay {
    pub fn kind(&self) -> DecayKind {
        match self.law {
            DecayLaw::Polynomial { .. } => DecayKind::Polynomial,
            DecayLaw::Exponential { .. } => DecayKind::Exponential,
        }
    }

    pub fn polynomial(exponent: f64, gamma: f64, source: impl Into<String>) -> Self {
        Self { law: DecayLaw::Polynomial { exponent }, gamma, source: source.into() }
    }

    pub fn exponential(rate: Option<f64>, gamma: f64, source: impl Into<String>) -> Self {
        Self { law: DecayLaw::Exponential { rate }, gamma, source: source.into() }
    }

    /// Same law with the exponential rate filled in.
    pub fn with_rate(mut self, rate: f64) -> Self {
        if let DecayLaw::Exponential { .. } = self.law {
            self.law = DecayLaw::Exponential { rate: Some(rate) };
        }
        self
    }

    /// `Θ(t)`, or `None` for an exponential law without a rate.
    pub fn theta(&self, t: f64) -> Option<f64> {
        match self.law {
            DecayLaw::Polynomial { exponent } => Some(1.0 / (1.0 + t.powf(exponent))),
            DecayLaw::Exponential { rate } => rate.map(|r| (-r * t).exp()),
        }
    }
}

impl fmt::Display for PredictedDecay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.law {
            DecayLaw::Polynomial { exponent } => write!(f, "polynomial exponent={exponent}")?,
            DecayLaw::Exponential { rate: Some(r) } => write!(f, "exponential rate={r}")?,
            DecayLaw::Exponential { rate: None } => write!(f, "exponential rate=1/C")?,
        }
        write!(f, " gamma={} ({})", self.gamma, self.source)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Law(PredictedDecay),
    /// Outside the hypotheses of every theorem; carries the reason.
    NotCovered(String),
}

impl Prediction {
    pub fn law(&self) -> Option<&PredictedDecay> {
        match self {
            Self::Law(l) => Some(l),
            Self::NotCovered(_) => None,
        }
    }
}

/// The decay the theorems guarantee for `‖u‖_s` under `op` and `td` in `dim` dimensions.
///
/// With memory (`λ1 > 0`) the law is `1/(1 + t^(α/γ))`. Without it the law is
/// exponential for `γ <= 1` and `1/(1 + t^(1/(γ-1)))` otherwise.
pub fn predicted_rate(op: &DiffusionOperator, td: &TimeDerivativeSpec, s: f64, dim: usize) -> Prediction {
    if let Err(e) = td.validate() {
        return Prediction::NotCovered(e.to_string());
    }
    if !(s >= 1.0 && s.is_finite()) {
        return Prediction::NotCovered(format!("Lebesgue exponent s = {s} is below 1"));
    }
    if let Err(e) = op.validate(dim) {
        return Prediction::NotCovered(e.to_string());
    }
    let Some(gamma) = op.structural_gamma(dim, s) else {
        return Prediction::NotCovered(format!("{} with s = {s} in dimension {dim} is outside the theorem hypotheses", op.name()));
    };
    let source = format!("{}, structural exponent gamma = {gamma}", op.name());
    if td.has_memory() {
        Prediction::Law(PredictedDecay::polynomial(td.alpha / gamma, gamma, source))
    } else if gamma <= 1.0 {
        Prediction::Law(PredictedDecay::exponential(None, gamma, source))
    } else {
        Prediction::Law(PredictedDecay::polynomial(1.0 / (gamma - 1.0), gamma, source))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum WindowPolicy {
    /// Second half of `[t_first, T]` in log-time, `t_first` the first positive time.
    #[default]
    LastHalfLogTime,
    Range(f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub kind: DecayKind,
    /// Polynomial exponent `p` of `C/(1 + t^p)`, or rate `r` of `C e^(-r t)`.
    pub exponent: f64,
    pub constant: f64,
    /// RMS residual of the chosen model in log space.
    pub residual: f64,
    /// RMS residual of the other model.
    pub alt_residual: f64,
    pub window: (f64, f64),
}

/// Minimum number of samples inside the fit window.
pub const MIN_FIT_POINTS: usize = 20;

fn window_samples(times: &[f64], norms: &[f64], policy: WindowPolicy) -> Result<(Vec<f64>, Vec<f64>, (f64, f64))> {
    let t_end = *times.last().ok_or_else(|| Error::InvalidParameter("empty trace".into()))?;
    let (lo, hi) = match policy {
        WindowPolicy::LastHalfLogTime => {
            let t1 = times
                .iter()
                .copied()
                .find(|&t| t > 0.0)
                .ok_or_else(|| Error::InvalidParameter("trace has no positive times".into()))?;
            ((0.5 * (t1.ln() + t_end.ln())).exp(), t_end)
        }
        WindowPolicy::Range(a, b) => (a, b),
    };
    if !(lo < hi) {
        return invalid(format!("degenerate fit window [{lo}, {hi}]"));
    }
    let mut t = Vec::new();
    let mut v = Vec::new();
    for (&ti, &ni) in times.iter().zip(norms) {
        if ti >= lo * (1.0 - 1e-12) && ti <= hi * (1.0 + 1e-12) {
            if !(ni > 0.0 && ni.is_finite()) {
                return invalid(format!("norm {ni} at t = {ti} inside the fit window is not positive"));
            }
            t.push(ti);
            v.push(ni);
        }
    }
    if t.len() < MIN_FIT_POINTS {
        return invalid(format!("fit window [{lo}, {hi}] holds {} points, need {MIN_FIT_POINTS}", t.len()));
    }
    Ok((t, v, (lo, hi)))
}

/// Best `log C` and RMS residual of `log v ≈ log C - log(1 + t^p)`.
fn poly_fit(t: &[f64], lv: &[f64], p: f64) -> (f64, f64) {
    let shape: Vec<f64> = t.iter().map(|&x| -(t_pow_ln1p(x, p))).collect();
    let n = t.len() as f64;
    let lc = lv.iter().zip(&shape).map(|(a, b)| a - b).sum::<f64>() / n;
    let ss: f64 = lv.iter().zip(&shape).map(|(a, b)| (a - lc - b).powi(2)).sum();
    (lc, (ss / n).sqrt())
}

/// `ln(1 + t^p)` without overflow.
fn t_pow_ln1p(t: f64, p: f64) -> f64 {
    let l = p * t.ln();
    if l > 30.0 {
        l + (-l).exp().ln_1p()
    } else {
        l.exp().ln_1p()
    }
}

/// Least squares line `y ≈ a + b x`; returns `(a, b, rms)`.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let ss: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    (a, b, (ss / n).sqrt())
}

/// Fits `‖u‖_s` on the window with both models and keeps the better one.
///
/// With `prefer`, the other kind wins only if its residual is more than 10%
/// smaller.
pub fn fit_decay(trace: &NormTrace, s: f64, policy: WindowPolicy, prefer: Option<DecayKind>) -> Result<DecayFit> {
    let norms = trace
        .norms_for(s)
        .ok_or_else(|| Error::InvalidParameter(format!("trace has no norms for s = {s}")))?;
    fit_samples(&trace.times, norms, policy, prefer)
}

/// [`fit_decay`] on raw samples.
pub fn fit_samples(times: &[f64], norms: &[f64], policy: WindowPolicy, prefer: Option<DecayKind>) -> Result<DecayFit> {
    if times.len() != norms.len() {
        return Err(Error::Dimension(format!("{} times but {} norms", times.len(), norms.len())));
    }
    if norms.iter().all(|&v| v == 0.0) {
        return invalid("all norms are zero");
    }
    let (t, v, window) = window_samples(times, norms, policy)?;
    let lv: Vec<f64> = v.iter().map(|x| x.ln()).collect();

    // polynomial: scan log p, then golden section around the best node
    let (lp_lo, lp_hi) = (1e-3f64.ln(), 50f64.ln());
    const SCAN: usize = 120;
    let at = |k: usize| lp_lo + (lp_hi - lp_lo) * k as f64 / SCAN as f64;
    let obj = |lp: f64| poly_fit(&t, &lv, lp.exp()).1;
    let best = (0..=SCAN).min_by(|&a, &b| obj(at(a)).total_cmp(&obj(at(b)))).unwrap_or(0);
    let (mut a, mut b) = (at(best.saturating_sub(1)), at((best + 1).min(SCAN)));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if obj(x1) < obj(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let p = (0.5 * (a + b)).exp();
    let (lc_poly, res_poly) = poly_fit(&t, &lv, p);

    let (a_exp, slope, res_exp) = line_fit(&t, &lv);

    let poly_wins = match prefer {
        Some(DecayKind::Polynomial) => res_exp >= 0.9 * res_poly,
        Some(DecayKind::Exponential) => res_poly < 0.9 * res_exp,
        None => res_poly <= res_exp,
    };
    Ok(if poly_wins {
        DecayFit {
            kind: DecayKind::Polynomial,
            exponent: p,
            constant: lc_poly.exp(),
            residual: res_poly,
            alt_residual: res_exp,
            window,
        }
    } else {
        DecayFit {
            kind: DecayKind::Exponential,
            exponent: -slope,
            constant: a_exp.exp(),
            residual: res_exp,
            alt_residual: res_poly,
            window,
        }
    })
}

/// Least-squares slope of `log ‖u‖` against `log t` over `[t_lo, t_hi]`.
pub fn loglog_slope(times: &[f64], norms: &[f64], t_lo: f64, t_hi: f64) -> Result<f64> {
    let (t, v, _) = window_samples(times, norms, WindowPolicy::Range(t_lo, t_hi))?;
    let x: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = v.iter().map(|v| v.ln()).collect();
    Ok(line_fit(&x, &y).1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub holds: bool,
    /// `max_t ‖u(t)‖ / Θ(t)` over the whole trace.
    pub c_star_hat: f64,
    /// Maxima of `‖u‖/Θ` over successive octaves `[a, 2a), [2a, 4a), ...` of the late window.
    pub block_maxima: Vec<f64>,
    pub law: PredictedDecay,
}

/// Growth allowed between consecutive octave maxima of `‖u‖/Θ`.
pub const OCTAVE_SLACK: f64 = 1.05;

/// Checks `‖u(t)‖_s <= C* Θ(t)` on a recorded trace.
///
/// `C*` is the largest ratio `‖u‖/Θ`. The bound holds when every ratio is
/// finite and, over the second half of the trace in log-time, the maximum of
/// the ratio over each octave is at most 5% above that of the octave before,
/// so the bound is not being outrun by slower late-time decay.
///
/// An exponential law without a rate takes `r = 1/Ĉ` from the recorded
/// energies (see [`empirical_constant`]), or the fitted rate when the trace
/// has no energies.
pub fn verify_bound(trace: &NormTrace, s: f64, predicted: &PredictedDecay) -> Result<BoundCheck> {
    let norms = trace
        .norms_for(s)
        .ok_or_else(|| Error::InvalidParameter(format!("trace has no norms for s = {s}")))?;
    let law = resolve_rate(trace, s, predicted)?;
    let ratios: Vec<f64> = trace
        .times
        .iter()
        .zip(norms)
        .map(|(&t, &n)| n / law.theta(t).unwrap_or(f64::NAN))
        .collect();
    let finite = ratios.iter().all(|r| r.is_finite());
    let c_star_hat = ratios.iter().copied().fold(0.0, f64::max);
    let mut block_maxima = Vec::new();
    if let Some(t1) = trace.times.iter().copied().find(|&t| t > 0.0) {
        let t_end = *trace.times.last().unwrap_or(&t1);
        let mut a = (0.5 * (t1.ln() + t_end.ln())).exp();
        while a <= t_end {
            let b = 2.0 * a;
            let m = trace
                .times
                .iter()
                .zip(&ratios)
                .filter(|(&t, _)| t >= a && (t < b || (b > t_end && t <= t_end)))
                .map(|(_, &r)| r)
                .fold(f64::NEG_INFINITY, f64::max);
            if m.is_finite() {
                block_maxima.push(m);
            }
            a = b;
        }
    }
    let monotone = block_maxima.windows(2).all(|w| w[1] <= OCTAVE_SLACK * w[0]);
    Ok(BoundCheck { holds: finite && monotone && c_star_hat > 0.0, c_star_hat, block_maxima, law })
}

fn resolve_rate(trace: &NormTrace, s: f64, predicted: &PredictedDecay) -> Result<PredictedDecay> {
    if let DecayLaw::Exponential { rate: None } = predicted.law {
        let rate = match empirical_constant(trace, s, predicted.gamma) {
            Some(c) => 1.0 / c,
            None => {
                let f = fit_decay(trace, s, WindowPolicy::LastHalfLogTime, Some(DecayKind::Exponential))?;
                f.exponent
            }
        };
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::NonFinite(format!("estimated exponential rate {rate}")));
        }
        return Ok(predicted.clone().with_rate(rate));
    }
    Ok(predicted.clone())
}

/// `Ĉ = max ‖u‖_s^(s-1+γ) / ∫|u|^(s-2) Re(ū N[u])` over recorded nodes with
/// positive energy; needs a trace recorded with energies at this `s`.
pub fn empirical_constant(trace: &NormTrace, s: f64, gamma: f64) -> Option<f64> {
    if trace.energy_s != Some(s) || trace.energies.is_empty() {
        return None;
    }
    let norms = trace.norms_for(s)?;
    let c = norms
        .iter()
        .zip(&trace.energies)
        .filter(|(&n, &e)| e > 0.0 && n > 0.0)
        .map(|(&n, &e)| n.powf(s - 1.0 + gamma) / e)
        .fold(0.0, f64::max);
    (c > 0.0 && c.is_finite()).then_some(c)
}

/// Rate of the bound `‖u_k‖ <= ‖u_0‖ (1 + dt/C)^(-k)` that backward Euler
/// inherits from `‖u‖' <= -‖u‖/C`; tends to `1/C` as `dt -> 0`.
pub fn backward_euler_rate(c: f64, dt: f64) -> f64 {
    (dt / c).ln_1p() / dt
}

#[derive(Debug, Clone, PartialEq)]
pub struct DifferentialCheck {
    pub c_hat: f64,
    /// Nodes where `(λ1 ∂t^α + λ2 ∂t)‖u‖ <= -‖u‖^γ / Ĉ` holds.
    pub satisfied: usize,
    pub total: usize,
}

impl DifferentialCheck {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.satisfied as f64 / self.total as f64
        }
    }
}

/// Evaluates the discrete mixed derivative of `‖u‖_s` along a trace recorded
/// at every step and compares it with `-‖u‖^γ/Ĉ`, up to a relative `tol`.
pub fn differential_inequality(
    trace: &NormTrace,
    td: &TimeDerivativeSpec,
    s: f64,
    gamma: f64,
    c_hat: f64,
    tol: f64,
) -> Result<DifferentialCheck> {
    let norms = trace
        .norms_for(s)
        .ok_or_else(|| Error::InvalidParameter(format!("trace has no norms for s = {s}")))?;
    if trace.len() < 2 {
        return invalid("trace needs at least two samples");
    }
    let dt = trace.times[1] - trace.times[0];
    let uniform = trace
        .times
        .iter()
        .enumerate()
        .all(|(k, &t)| (t - k as f64 * dt).abs() <= 1e-9 * t.max(dt));
    if !uniform {
        return invalid("differential check needs a trace recorded at every step");
    }
    if !(c_hat > 0.0 && c_hat.is_finite()) {
        return invalid(format!("constant must be positive, got {c_hat}"));
    }
    let d = mixed_derivative_series(norms, dt, td);
    let mut satisfied = 0;
    for (k, dk) in d.iter().enumerate() {
        let rhs = -norms[k + 1].powf(gamma) / c_hat;
        if *dk <= rhs + tol * (dk.abs() + rhs.abs()) {
            satisfied += 1;
        }
    }
    Ok(DifferentialCheck { c_hat, satisfied, total: d.len() })
}
