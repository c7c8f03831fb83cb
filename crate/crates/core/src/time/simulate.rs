use super::{Scheme, Stepper, TimeDerivativeSpec};
use crate::error::{invalid, Error, Result};
use crate::grid::{lp_norm_unchecked, Field, Grid, InitialCondition};
use crate::inequality::energy_with;
use crate::operators::{DiffusionOperator, DiscreteOperator, KernelNormalization};

/// Norm growth factor over the initial value that counts as blow-up.
const BLOW_UP_FACTOR: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub grid: Grid,
    pub op: DiffusionOperator,
    pub td: TimeDerivativeSpec,
    pub u0: InitialCondition,
    pub dt: f64,
    pub t_final: f64,
    pub s_list: Vec<f64>,
    pub record_every: usize,
    pub kernel: KernelNormalization,
    pub scheme: Scheme,
    pub c_stab: f64,
    /// Also record `∫ |u|^(s-2) Re(ū N[u])` at this `s`.
    pub energy_s: Option<f64>,
    pub keep_snapshots: bool,
}

impl SimulationConfig {
    /// Defaults: `s = 2`, every step recorded, bare kernels, automatic scheme, `c_stab = 0.2`.
    pub fn new(grid: Grid, op: DiffusionOperator, td: TimeDerivativeSpec, u0: InitialCondition, dt: f64, t_final: f64) -> Self {
        Self {
            grid,
            op,
            td,
            u0,
            dt,
            t_final,
            s_list: vec![2.0],
            record_every: 1,
            kernel: KernelNormalization::Bare,
            scheme: Scheme::Auto,
            c_stab: 0.2,
            energy_s: None,
            keep_snapshots: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.td.validate()?;
        self.op.validate(self.grid.dim())?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return invalid(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final > self.dt && self.t_final.is_finite()) {
            return invalid(format!("need dt < T, got dt = {} and T = {}", self.dt, self.t_final));
        }
        if self.s_list.is_empty() {
            return invalid("s_list is empty");
        }
        for &s in self.s_list.iter().chain(self.energy_s.iter()) {
            if !(s >= 1.0 && s.is_finite()) {
                return invalid(format!("Lebesgue exponent must satisfy s >= 1, got {s}"));
            }
        }
        if self.record_every == 0 {
            return invalid("record_every must be at least 1");
        }
        if !(self.c_stab > 0.0) {
            return invalid(format!("c_stab must be positive, got {}", self.c_stab));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowUp {
    pub step: usize,
    pub time: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormTrace {
    pub times: Vec<f64>,
    pub s_list: Vec<f64>,
    /// `norms[k][r]` is the `s_list[k]` norm at `times[r]`.
    pub norms: Vec<Vec<f64>>,
    pub energy_s: Option<f64>,
    pub energies: Vec<f64>,
    pub max_imag_residue: f64,
    pub blow_up: Option<BlowUp>,
    pub snapshots: Vec<Field>,
}

impl NormTrace {
    pub fn new(s_list: Vec<f64>) -> Self {
        let norms = vec![Vec::new(); s_list.len()];
        Self {
            times: Vec::new(),
            s_list,
            norms,
            energy_s: None,
            energies: Vec::new(),
            max_imag_residue: 0.0,
            blow_up: None,
            snapshots: Vec::new(),
        }
    }

    /// Builds a single-`s` trace from samples.
    pub fn from_samples(s: f64, times: Vec<f64>, norms: Vec<f64>) -> Result<Self> {
        if times.len() != norms.len() {
            return Err(Error::Dimension(format!("{} times but {} norms", times.len(), norms.len())));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("trace times must be strictly increasing");
        }
        if norms.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return invalid("trace norms must be finite and nonnegative");
        }
        let mut t = Self::new(vec![s]);
        t.times = times;
        t.norms = vec![norms];
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn norms_for(&self, s: f64) -> Option<&[f64]> {
        self.s_list.iter().position(|&x| x == s).map(|k| self.norms[k].as_slice())
    }

    fn record(&mut self, t: f64, u: &Field, op: &DiscreteOperator, keep: bool) -> Result<()> {
        self.times.push(t);
        let vol = u.grid().cell_volume();
        for (k, &s) in self.s_list.iter().enumerate() {
            self.norms[k].push(lp_norm_unchecked(u.values(), s, vol));
        }
        if let Some(s) = self.energy_s {
            self.energies.push(energy_with(op, u, s)?);
        }
        if op.op().is_real() {
            self.max_imag_residue = self.max_imag_residue.max(u.imag_residue());
        }
        if keep {
            self.snapshots.push(u.clone());
        }
        Ok(())
    }
}

/// Runs the configured simulation to `T`, or until blow-up.
///
/// Configuration problems are errors; a non-finite state or runaway norm
/// ends the run early with `blow_up` set on the returned trace.
pub fn simulate(cfg: &SimulationConfig) -> Result<NormTrace> {
    cfg.validate()?;
    let op = DiscreteOperator::new(&cfg.op, &cfg.grid, cfg.kernel)?;
    let u0 = cfg.u0.build(&cfg.grid);
    let mut trace = NormTrace::new(cfg.s_list.clone());
    trace.energy_s = cfg.energy_s;
    trace.record(0.0, &u0, &op, cfg.keep_snapshots)?;
    let start = trace.norms[0][0];
    let mut stepper = Stepper::new(op, cfg.td, cfg.dt, u0, cfg.scheme, cfg.c_stab)?;
    let total = cfg.steps();
    for k in 1..=total {
        if let Err(e) = stepper.step() {
            return match e {
                Error::NonFinite(msg) | Error::Singular(msg) => {
                    trace.blow_up = Some(BlowUp { step: k, time: k as f64 * cfg.dt, reason: msg });
                    Ok(trace)
                }
                other => Err(other),
            };
        }
        let u = stepper.state();
        let n0 = lp_norm_unchecked(u.values(), cfg.s_list[0], u.grid().cell_volume());
        if n0 > BLOW_UP_FACTOR * start.max(f64::MIN_POSITIVE) && start > 0.0 {
            trace.blow_up = Some(BlowUp {
                step: k,
                time: k as f64 * cfg.dt,
                reason: format!("norm grew from {start:.3e} to {n0:.3e}"),
            });
            return Ok(trace);
        }
        if k % cfg.record_every == 0 || k == total {
            let t = k as f64 * cfg.dt;
            trace.record(t, stepper.state(), stepper.operator(), cfg.keep_snapshots)?;
        }
    }
    Ok(trace)
}
