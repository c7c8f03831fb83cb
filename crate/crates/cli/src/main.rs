//! `fracdecay` command line: simulate, verify, barrier, fit, sweep.

mod config;
mod run;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand};
use config::{expand, parse_entries, window, ExperimentConfig};
use fracdecay::barriers::{check_comparison, solve_scalar_ode, BarrierKind, BarrierSpec, ScalarOde};
use fracdecay::decay::{fit_samples, DecayKind, Prediction};
use fracdecay::grid::Grid;
use fracdecay::inequality::{check_identity, default_samples, structural_check, theorem_table, IDENTITY_NAMES};
use fracdecay::time::{CaputoNormalization, TimeDerivativeSpec};
use rayon::prelude::*;
use run::{num, run_experiment, write_atomic, Failure, EXIT_BLOW_UP, EXIT_FAIL, EXIT_PASS};
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "fracdecay", version, about = "Decay experiments for mixed classical/Caputo diffusion equations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment file; writes trace.csv and report.txt.
    Simulate { config: PathBuf },
    /// Check an inequality by random sampling, or `all` of them plus the structural table.
    Verify {
        name: String,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "out")]
        outdir: PathBuf,
    },
    /// Compare a scalar solution with its barrier; writes barrier.csv.
    Barrier(BarrierArgs),
    /// Fit a decay law to a trace.csv.
    Fit {
        trace: PathBuf,
        /// Lebesgue exponent to fit; defaults to the first one in the file.
        #[arg(long)]
        s: Option<f64>,
        /// `last_half` or `a:b`.
        #[arg(long, default_value = "last_half")]
        window: String,
        /// Kind that wins near ties: polynomial or exponential.
        #[arg(long)]
        prefer: Option<String>,
    },
    /// Run every combination of the list-valued keys; writes summary.csv.
    Sweep { config: PathBuf },
}

#[derive(clap::Args)]
struct BarrierArgs {
    #[arg(long, default_value_t = 0.5)]
    lambda1: f64,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Coefficient of `v^γ` in the scalar equation.
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    /// Initial value of the barrier.
    #[arg(long, default_value_t = 1.0)]
    u0: f64,
    /// Initial value of the solution; defaults to `0.9 u0`.
    #[arg(long)]
    v0: Option<f64>,
    #[arg(long, default_value_t = 20.0)]
    t_final: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    /// mixed_vz15, classical_exp, classical_power; chosen from the equation by default.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long, default_value = "standard")]
    normalization: String,
    #[arg(long, default_value = "barrier")]
    name: String,
    #[arg(long, default_value = "out")]
    outdir: PathBuf,
}

fn read(path: &PathBuf) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn cmd_simulate(path: &PathBuf) -> Result<i32, Failure> {
    let cfg = ExperimentConfig::parse(&read(path)?)?;
    let dir = run::experiment_dir(&cfg);
    let out = run_experiment(&cfg, &dir)?;
    print!("{}", std::fs::read_to_string(dir.join("report.txt")).unwrap_or_default());
    Ok(out.code)
}

fn cmd_verify(name: &str, samples: usize, seed: u64, outdir: &std::path::Path) -> Result<i32, Failure> {
    let names: Vec<&str> = if name == "all" { IDENTITY_NAMES.to_vec() } else { vec![name] };
    let mut text = String::new();
    let mut pass = true;
    for n in &names {
        let r = check_identity(n, samples, seed)?;
        pass &= r.pass;
        let _ = writeln!(text, "{r}");
    }
    if name == "all" {
        let per = (samples / 1000).clamp(4, 40);
        for case in theorem_table(&[2.0, 3.0]) {
            let g = Grid::unit_interval(99)?;
            let fields = default_samples(&g, per, seed, case.nonnegative, !case.op.is_real());
            let rep = structural_check(&case.op, case.s, case.gamma, &fields)?;
            let ok = rep.violations == 0;
            pass &= ok;
            let _ = writeln!(
                text,
                "structural {} s={} gamma={} {}: samples={} violations={} C_hat={}",
                case.op,
                case.s,
                case.gamma,
                if ok { "PASS" } else { "FAIL" },
                rep.samples,
                rep.violations,
                rep.c_hat
            );
        }
    }
    let dir = outdir.join(if name == "all" { "verify_all".to_string() } else { format!("verify_{name}") });
    write_atomic(&dir.join("report.txt"), &text)?;
    print!("{text}");
    Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_barrier(a: &BarrierArgs) -> Result<i32, Failure> {
    let norm: CaputoNormalization = a.normalization.parse()?;
    let td = TimeDerivativeSpec::new(a.lambda1, a.lambda2.unwrap_or(1.0 - a.lambda1), a.alpha, norm)?;
    let ode = ScalarOde::new(td, a.nu, a.gamma)?;
    let spec = match a.kind.as_deref() {
        None => BarrierSpec::for_equation(a.u0, a.nu, a.gamma, &td)?,
        Some(k) => match k.parse::<BarrierKind>()? {
            BarrierKind::MixedVz15 => BarrierSpec::mixed_with(a.u0, a.nu, a.gamma, a.alpha, norm)?,
            kind => {
                let b = BarrierSpec::classical(a.u0, a.nu, a.gamma)?;
                if b.kind != kind {
                    return Err(Failure::config(anyhow!("barrier {kind} does not apply to gamma = {}", a.gamma)));
                }
                b
            }
        },
    };
    let w = spec.trajectory(ode, a.t_final, a.dt)?;
    let v = solve_scalar_ode(&ode, a.v0.unwrap_or(0.9 * a.u0), a.t_final, a.dt)?;
    let rep = check_comparison(&w, &v, &ode)?;
    let mut csv = String::from("t,w,v\n");
    for ((t, wv), vv) in w.times.iter().zip(&w.values).zip(&v.values) {
        let _ = writeln!(csv, "{},{},{}", num(*t), num(*wv), num(*vv));
    }
    let dir = a.outdir.join(&a.name);
    write_atomic(&dir.join("barrier.csv"), &csv)?;
    let text = format!(
        "barrier kind={} t0={} K={}\nsupersolution={} subsolution={} hypothesis={} ordered={}\ntolerance={:e} worst_super_residual={:e} worst_sub_residual={:e} min_gap={:e}\n",
        spec.kind,
        spec.t0,
        spec.k,
        rep.is_super,
        rep.is_sub,
        rep.hypothesis,
        rep.ordered,
        rep.tolerance,
        rep.worst_super_residual,
        rep.worst_sub_residual,
        rep.min_gap
    );
    write_atomic(&dir.join("report.txt"), &text)?;
    print!("{text}");
    Ok(if rep.ordered { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_fit(path: &PathBuf, s: Option<f64>, win: &str, prefer: Option<&str>) -> Result<i32, Failure> {
    let text = read(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("{} is empty", path.display()))?;
    if header.trim() != "t,s,norm,predicted_bound,ratio" {
        return Err(Failure::config(anyhow!("unexpected header '{header}'")));
    }
    let mut rows = Vec::new();
    for (no, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(Failure::config(anyhow!("line {}: expected 5 columns", no + 2)));
        }
        let p = |c: &str| c.trim().parse::<f64>().with_context(|| format!("line {}: bad number '{c}'", no + 2));
        rows.push((p(cols[0])?, p(cols[1])?, p(cols[2])?));
    }
    let s = match s {
        Some(s) => s,
        None => rows.first().map(|r| r.1).ok_or_else(|| anyhow!("trace has no rows"))?,
    };
    let (times, norms): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| r.1 == s).map(|r| (r.0, r.2)).unzip();
    if times.is_empty() {
        return Err(Failure::config(anyhow!("trace has no rows for s = {s}")));
    }
    let prefer = prefer.map(str::parse::<DecayKind>).transpose()?;
    let f = fit_samples(&times, &norms, window(win)?, prefer)?;
    println!(
        "s={s} kind={} exponent={} constant={} residual={:e} alt_residual={:e} window=[{}, {}]",
        f.kind, f.exponent, f.constant, f.residual, f.alt_residual, f.window.0, f.window.1
    );
    Ok(EXIT_PASS)
}

fn cmd_sweep(path: &PathBuf) -> Result<i32, Failure> {
    let entries = parse_entries(&read(path)?)?;
    if !entries.iter().any(|e| e.is_list) {
        return Err(Failure::config(anyhow!("sweep file has no list-valued keys")));
    }
    let cells = expand(&entries)?;
    let configs: Vec<(ExperimentConfig, Vec<(String, String)>)> = cells
        .into_iter()
        .map(|(map, swept)| {
            let label: Vec<String> = swept.iter().map(|(k, v)| format!("{k}={v}")).collect();
            ExperimentConfig::from_map(&map).map(|c| (c, swept)).with_context(|| format!("cell {}", label.join(" ")))
        })
        .collect::<anyhow::Result<_>>()?;
    let base = run::experiment_dir(&configs[0].0);
    let results: Vec<Result<run::Outcome, Failure>> = configs
        .par_iter()
        .enumerate()
        .map(|(i, (cfg, _))| run_experiment(cfg, &base.join(format!("cell_{i:03}"))))
        .collect();
    let mut csv = String::from(
        "cell,params,operator,lambda1,alpha,s,predicted_kind,predicted_exponent,fit_kind,fit_exponent,c_star_hat,holds,status\n",
    );
    let mut code = EXIT_PASS;
    for (i, ((cfg, swept), res)) in configs.iter().zip(results).enumerate() {
        let out = res?;
        code = code.max(out.code);
        let params: Vec<String> = swept.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let status = match out.code {
            EXIT_PASS => "pass",
            EXIT_BLOW_UP => "blow_up",
            _ => "bound_failed",
        };
        let head = format!("cell_{i:03},{},{},{},{}", params.join(";"), cfg.sim.op.name(), cfg.sim.td.lambda1, cfg.sim.td.alpha);
        if out.analyses.is_empty() {
            let _ = writeln!(csv, "{head},{},,,,,,,{status}", cfg.sim.s_list[0]);
        }
        for a in &out.analyses {
            let (pk, pe) = match &a.prediction {
                Prediction::Law(l) => (
                    l.kind().to_string(),
                    match l.law {
                        fracdecay::decay::DecayLaw::Polynomial { exponent } => num(exponent),
                        fracdecay::decay::DecayLaw::Exponential { .. } => String::new(),
                    },
                ),
                Prediction::NotCovered(_) => ("not_covered".into(), String::new()),
            };
            let (fk, fe) = match &a.fit {
                Ok(f) => (f.kind.to_string(), num(f.exponent)),
                Err(_) => (String::new(), String::new()),
            };
            let (c, holds) = match &a.bound {
                Some(b) => (num(b.c_star_hat), b.holds.to_string()),
                None => (String::new(), String::new()),
            };
            let _ = writeln!(csv, "{head},{},{pk},{pe},{fk},{fe},{c},{holds},{status}", a.s);
        }
    }
    write_atomic(&base.join("summary.csv"), &csv)?;
    print!("{csv}");
    Ok(code)
}

fn threads_from_env() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("FRACDECAY_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| anyhow!("FRACDECAY_THREADS must be a positive integer, got '{v}'"))?;
        if n == 0 {
            bail!("FRACDECAY_THREADS must be a positive integer, got 0");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let res = threads_from_env().map_err(Failure::config).and_then(|_| match &cli.cmd {
        Cmd::Simulate { config } => cmd_simulate(config),
        Cmd::Verify { name, samples, seed, outdir } => cmd_verify(name, *samples, *seed, outdir),
        Cmd::Barrier(a) => cmd_barrier(a),
        Cmd::Fit { trace, s, window, prefer } => cmd_fit(trace, *s, window, prefer.as_deref()),
        Cmd::Sweep { config } => cmd_sweep(config),
    });
    let code = match res {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    };
    std::process::exit(code);
}
