//! Runs one experiment and renders its artifacts.

use crate::config::ExperimentConfig;
use anyhow::{Context, Result};
use fracdecay::decay::{
    backward_euler_rate, empirical_constant, fit_decay, predicted_rate, verify_bound, BoundCheck, DecayFit, DecayLaw,
    Prediction,
};
use fracdecay::time::{simulate, NormTrace};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Exit codes shared by all subcommands.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_BLOW_UP: i32 = 2;
pub const EXIT_FAIL: i32 = 3;

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn config(error: anyhow::Error) -> Self {
        Self { code: EXIT_CONFIG, error }
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Self::config(e.into())
    }
}

/// Number with 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let file = path.file_name().and_then(|f| f.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{file}.tmp"));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Per-`s` analysis of a finished run.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub s: f64,
    pub prediction: Prediction,
    pub fit: Result<DecayFit, String>,
    pub bound: Option<BoundCheck>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub analyses: Vec<Analysis>,
    pub code: i32,
}

pub fn analyze(cfg: &ExperimentConfig, trace: &NormTrace) -> Vec<Analysis> {
    let dim = cfg.sim.grid.dim();
    cfg.sim
        .s_list
        .iter()
        .map(|&s| {
            let prediction = predicted_rate(&cfg.sim.op, &cfg.sim.td, s, dim);
            let prefer = prediction.law().map(|l| l.kind());
            let fit = fit_decay(trace, s, cfg.fit_window, prefer).map_err(|e| e.to_string());
            // exponential laws: the rate the time discretization inherits from 1/Ĉ
            let law = prediction.law().map(|l| match (l.law, empirical_constant(trace, s, l.gamma)) {
                (DecayLaw::Exponential { rate: None }, Some(c)) => l.clone().with_rate(backward_euler_rate(c, cfg.sim.dt)),
                _ => l.clone(),
            });
            let bound = law.and_then(|l| verify_bound(trace, s, &l).ok());
            Analysis { s, prediction, fit, bound }
        })
        .collect()
}

/// Simulates, writes `trace.csv` and `report.txt` under `dir`, and returns the outcome.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome, Failure> {
    let trace = simulate(&cfg.sim)?;
    let analyses = if trace.blow_up.is_none() { analyze(cfg, &trace) } else { Vec::new() };
    let code = if trace.blow_up.is_some() {
        EXIT_BLOW_UP
    } else if analyses.iter().any(|a| a.bound.as_ref().is_some_and(|b| !b.holds)) {
        EXIT_FAIL
    } else {
        EXIT_PASS
    };
    write_atomic(&dir.join("trace.csv"), &trace_csv(&trace, &analyses))?;
    write_atomic(&dir.join("report.txt"), &report(cfg, &trace, &analyses, code))?;
    Ok(Outcome { analyses, code })
}

pub fn experiment_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.outdir.join(&cfg.name)
}

pub fn trace_csv(trace: &NormTrace, analyses: &[Analysis]) -> String {
    let mut out = String::from("t,s,norm,predicted_bound,ratio\n");
    for (k, &t) in trace.times.iter().enumerate() {
        for (j, &s) in trace.s_list.iter().enumerate() {
            let norm = trace.norms[j][k];
            let bound = analyses
                .iter()
                .find(|a| a.s == s)
                .and_then(|a| a.bound.as_ref())
                .and_then(|b| b.law.theta(t).map(|th| b.c_star_hat * th));
            let (pb, ratio) = match bound {
                Some(b) => (num(b), num(norm / b)),
                None => ("nan".to_string(), "nan".to_string()),
            };
            let _ = writeln!(out, "{},{},{},{pb},{ratio}", num(t), num(s), num(norm));
        }
    }
    out
}

fn report(cfg: &ExperimentConfig, trace: &NormTrace, analyses: &[Analysis], code: i32) -> String {
    let sim = &cfg.sim;
    let td = &sim.td;
    let mut r = String::new();
    let _ = writeln!(r, "experiment={}", cfg.name);
    let _ = writeln!(r, "operator={}", sim.op);
    let _ = writeln!(
        r,
        "time_derivative lambda1={} lambda2={} alpha={} normalization={:?}",
        td.lambda1, td.lambda2, td.alpha, td.normalization
    );
    let n: Vec<String> = (0..sim.grid.dim()).map(|a| sim.grid.n(a).to_string()).collect();
    let _ = writeln!(r, "grid dim={} n={} dt={} t_final={} steps={}", sim.grid.dim(), n.join("x"), sim.dt, sim.t_final, sim.steps());
    let _ = writeln!(r, "recorded={} max_imag_residue={:e}", trace.len(), trace.max_imag_residue);
    if let Some(b) = &trace.blow_up {
        let _ = writeln!(r, "blow_up step={} t={} reason={}", b.step, b.time, b.reason);
    }
    for a in analyses {
        let _ = writeln!(r, "\n[s={}]", a.s);
        match &a.prediction {
            Prediction::Law(l) => {
                let _ = writeln!(r, "predicted: kind={} {l}", l.kind());
            }
            Prediction::NotCovered(why) => {
                let _ = writeln!(r, "predicted: not covered ({why})");
            }
        }
        match &a.fit {
            Ok(f) => {
                let _ = writeln!(
                    r,
                    "fit: kind={} exponent={} constant={} residual={:e} alt_residual={:e} window=[{}, {}]",
                    f.kind, f.exponent, f.constant, f.residual, f.alt_residual, f.window.0, f.window.1
                );
            }
            Err(e) => {
                let _ = writeln!(r, "fit: unavailable ({e})");
            }
        }
        match &a.bound {
            Some(b) => {
                let _ = writeln!(r, "bound: holds={} law={}", b.holds, b.law);
                let _ = writeln!(r, "C_star_hat={}", b.c_star_hat);
            }
            None => {
                let _ = writeln!(r, "bound: not checked");
            }
        }
    }
    let status = match code {
        EXIT_PASS => "pass",
        EXIT_BLOW_UP => "blow_up",
        _ => "bound_failed",
    };
    let _ = writeln!(r, "\nstatus={status}");
    r
}
