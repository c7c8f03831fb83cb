//! End-to-end acceptance runs. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use fracdecay::barriers::{check_comparison, mittag_leffler, solve_scalar_ode, BarrierSpec, ScalarOde};
use fracdecay::decay::{
    differential_inequality, empirical_constant, fit_decay, loglog_slope, predicted_rate, verify_bound, DecayKind,
    PredictedDecay, WindowPolicy,
};
use fracdecay::grid::InitialCondition;
use fracdecay::inequality::{check_identity, default_samples, structural_check, theorem_table};
use fracdecay::operators::VectorPotential;
use fracdecay::time::{simulate, CaputoNormalization, NormTrace, SimulationConfig, TimeDerivativeSpec};
use fracdecay::{DiffusionOperator, Grid};
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn caputo(alpha: f64) -> TimeDerivativeSpec {
    TimeDerivativeSpec::new(1.0, 0.0, alpha, CaputoNormalization::Standard).unwrap()
}

fn heat_run(td: TimeDerivativeSpec, dt: f64, t_final: f64) -> NormTrace {
    let grid = Grid::unit_interval(199).unwrap();
    let mut cfg = SimulationConfig::new(
        grid,
        DiffusionOperator::Laplacian { d: 1.0 },
        td,
        InitialCondition::Eigenfunction { amplitude: 1.0 },
        dt,
        t_final,
    );
    cfg.energy_s = Some(2.0);
    simulate(&cfg).unwrap()
}

fn heat_classical() -> NormTrace {
    heat_run(TimeDerivativeSpec::classical(), 1e-4, 1.0)
}

fn heat_caputo(alpha: f64) -> NormTrace {
    heat_run(caputo(alpha), 0.02, 100.0)
}

fn mittag_leffler_oracle() -> Outcome {
    let ode = ScalarOde::new(caputo(0.5), 1.0, 1.0).unwrap();
    let traj = solve_scalar_ode(&ode, 1.0, 5.0, 1e-3).unwrap();
    let mut worst: f64 = 0.0;
    for (&t, &v) in traj.times.iter().zip(&traj.values) {
        if t >= 0.1 - 1e-12 {
            let e = mittag_leffler(0.5, -t.sqrt()).unwrap();
            worst = worst.max((v - e).abs() / e);
        }
    }
    outcome(worst < 0.02, format!("worst relative error {worst:.3e} (tol 2e-2)"))
}

fn classical_heat(trace: &NormTrace) -> Outcome {
    let pi2 = std::f64::consts::PI.powi(2);
    let fit = fit_decay(trace, 2.0, WindowPolicy::LastHalfLogTime, None).unwrap();
    let err = (fit.exponent - pi2).abs() / pi2;
    outcome(
        fit.kind == DecayKind::Exponential && err < 0.03,
        format!("kind={} rate={:.5} relative error {err:.2e} (tol 3e-2)", fit.kind, fit.exponent),
    )
}

fn caputo_heat(traces: &[(f64, NormTrace)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (alpha, tr) in traces {
        let slope = loglog_slope(&tr.times, tr.norms_for(2.0).unwrap(), 10.0, 100.0).unwrap();
        pass &= (slope + alpha).abs() <= 0.1;
        parts.push(format!("alpha={alpha} slope={slope:.4}"));
    }
    outcome(pass, format!("{} (tol 0.1)", parts.join(", ")))
}

fn dichotomy() -> Outcome {
    let grid = Grid::unit_interval(63).unwrap();
    let a = VectorPotential::Constant([1.0, 0.0]);
    let ops = [
        DiffusionOperator::Laplacian { d: 1.0 },
        DiffusionOperator::FractionalLaplacian { sigma: 0.5, d: 1.0 },
        DiffusionOperator::Magnetic { a },
        DiffusionOperator::FractionalMagnetic { sigma: 0.5, a },
        DiffusionOperator::KirchhoffClassical { m0: 1.0, b: 1.0 },
    ];
    let mut cells = Vec::new();
    for op in &ops {
        for (td, dt, t_final, want) in [
            (TimeDerivativeSpec::classical(), 1e-3, 2.0, DecayKind::Exponential),
            (caputo(0.5), 0.1, 100.0, DecayKind::Polynomial),
        ] {
            cells.push((op.clone(), td, dt, t_final, want));
        }
    }
    let results: Vec<(String, bool)> = std::thread::scope(|sc| {
        let handles: Vec<_> = cells
            .iter()
            .map(|(op, td, dt, t_final, want)| {
                sc.spawn(move || {
                    let cfg = SimulationConfig::new(
                        grid,
                        op.clone(),
                        *td,
                        InitialCondition::Eigenfunction { amplitude: 1.0 },
                        *dt,
                        *t_final,
                    );
                    let tr = simulate(&cfg).unwrap();
                    let prefer = predicted_rate(op, td, 2.0, 1).law().map(|l| l.kind());
                    let fit = fit_decay(&tr, 2.0, WindowPolicy::LastHalfLogTime, prefer).unwrap();
                    let ok = fit.kind == *want;
                    (format!("{}/lambda1={}:{}", op.name(), td.lambda1, fit.kind), ok)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let bad: Vec<&str> = results.iter().filter(|r| !r.1).map(|r| r.0.as_str()).collect();
    let detail = if bad.is_empty() {
        format!("{} cells classified as predicted", results.len())
    } else {
        format!("misclassified: {}", bad.join(", "))
    };
    outcome(bad.is_empty(), detail)
}

fn degenerate_kirchhoff() -> Outcome {
    let grid = Grid::unit_interval(99).unwrap();
    let op = DiffusionOperator::KirchhoffClassical { m0: 0.0, b: 1.0 };
    let cfg = SimulationConfig::new(
        grid,
        op,
        TimeDerivativeSpec::classical(),
        InitialCondition::Bump { amplitude: 1.0, radius: 0.6 },
        0.1,
        1000.0,
    );
    let tr = simulate(&cfg).unwrap();
    let fit = fit_decay(&tr, 2.0, WindowPolicy::LastHalfLogTime, Some(DecayKind::Polynomial)).unwrap();
    let law = PredictedDecay::polynomial(0.5, 3.0, "degenerate kirchhoff");
    let bound = verify_bound(&tr, 2.0, &law).unwrap();
    let sharp = fit.exponent <= 0.7;
    outcome(
        fit.kind == DecayKind::Polynomial && fit.exponent >= 0.4 && bound.holds,
        format!(
            "exponent={:.4} (>= 0.4, <= 0.7 {}) holds={} C*={:.4}",
            fit.exponent,
            if sharp { "yes" } else { "no" },
            bound.holds,
            bound.c_star_hat
        ),
    )
}

fn porous_medium() -> Outcome {
    let law = PredictedDecay::polynomial(1.0, 2.0, "porous medium II");
    let mut parts = Vec::new();
    let mut holds = true;
    let mut c = Vec::new();
    for n in [49, 99] {
        let grid = Grid::unit_interval(n).unwrap();
        let cfg = SimulationConfig::new(
            grid,
            DiffusionOperator::PorousMediumII { sigma: 0.25 },
            TimeDerivativeSpec::classical(),
            InitialCondition::Bump { amplitude: 1.0, radius: 0.6 },
            0.05,
            500.0,
        );
        let tr = simulate(&cfg).unwrap();
        let b = verify_bound(&tr, 2.0, &law).unwrap();
        holds &= b.holds;
        c.push(b.c_star_hat);
        parts.push(format!("n={n} holds={} C*={:.4}", b.holds, b.c_star_hat));
    }
    let ratio = c[1] / c[0];
    let stable = (0.5..=2.0).contains(&ratio);
    outcome(holds && stable, format!("{}, C* ratio {ratio:.3} (within x2)", parts.join(", ")))
}

fn inequality_suite() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut pass = true;
    for name in ["st00", "do1", "kirch_power", "magnetic_pointwise"] {
        for seed in [1, 2, 3] {
            let r = check_identity(name, 100_000, seed).unwrap();
            pass &= r.pass && r.worst_margin >= -1e-12;
            worst = worst.min(r.worst_margin);
        }
    }
    let mut violations = 0;
    let mut unstable = Vec::new();
    for case in theorem_table(&[2.0, 3.0]) {
        let mut reps = Vec::new();
        for n in [99, 199] {
            let g = Grid::unit_interval(n).unwrap();
            let complex = !case.op.is_real();
            let samples = default_samples(&g, 20, 7, case.nonnegative, complex);
            reps.push(structural_check(&case.op, case.s, case.gamma, &samples).unwrap());
        }
        violations += reps[0].violations + reps[1].violations;
        if !reps[0].stable_against(&reps[1]) {
            unstable.push(format!("{}/s={}", case.op.name(), case.s));
        }
    }
    pass &= violations == 0 && unstable.is_empty();
    outcome(
        pass,
        format!(
            "identity worst margin {worst:.3e}, structural violations {violations}, unstable C_hat [{}]",
            unstable.join(", ")
        ),
    )
}

fn barrier_domination() -> Outcome {
    let mut pass = true;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut failed = Vec::new();
    for alpha in [0.3, 0.5, 0.7] {
        for gamma in [1.0, 2.0, 3.0] {
            let td = TimeDerivativeSpec::new(0.5, 0.5, alpha, CaputoNormalization::Standard).unwrap();
            let ode = ScalarOde::new(td, 1.0, gamma).unwrap();
            let spec = BarrierSpec::mixed(1.0, 1.0, gamma, alpha).unwrap();
            let dt = 5e-3;
            let w = spec.trajectory(ode, 20.0, dt).unwrap();
            let v_eq = solve_scalar_ode(&ode, 1.0, 20.0, dt).unwrap();
            let excess = v_eq
                .times
                .iter()
                .zip(&v_eq.values)
                .map(|(&t, &v)| v - fracdecay::barriers::barrier_eval(&spec, t))
                .fold(f64::NEG_INFINITY, f64::max);
            worst_excess = worst_excess.max(excess);
            let v = solve_scalar_ode(&ode, 0.9, 20.0, dt).unwrap();
            let rep = check_comparison(&w, &v, &ode).unwrap();
            if excess > 1e-6 || !rep.ordered {
                pass = false;
                failed.push(format!("(alpha={alpha}, gamma={gamma})"));
            }
        }
    }
    outcome(pass, format!("worst v - w = {worst_excess:.3e} (tol 1e-6), failing cells [{}]", failed.join(", ")))
}

fn differential(classical: &NormTrace, caputo_runs: &[(f64, NormTrace)]) -> Outcome {
    let mut runs = vec![(TimeDerivativeSpec::classical(), "classical".to_string(), classical)];
    for (alpha, tr) in caputo_runs {
        runs.push((caputo(*alpha), format!("alpha={alpha}"), tr));
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for (td, label, tr) in runs {
        let c_hat = empirical_constant(tr, 2.0, 1.0).unwrap();
        let chk = differential_inequality(tr, &td, 2.0, 1.0, c_hat, 1e-6).unwrap();
        pass &= chk.fraction() >= 0.95;
        parts.push(format!("{label}: {:.2}%", 100.0 * chk.fraction()));
    }
    outcome(pass, format!("{} of nodes (need 95%)", parts.join(", ")))
}

fn main() {
    let start = Instant::now();
    let results: Vec<(usize, &str, Outcome, f64)> = std::thread::scope(|sc| {
        let timed = |f: &(dyn Fn() -> Outcome + Sync)| {
            let t = Instant::now();
            let o = f();
            (o, t.elapsed().as_secs_f64())
        };
        let h1 = sc.spawn(move || timed(&mittag_leffler_oracle));
        let runs = sc.spawn(|| {
            let t = Instant::now();
            let c = heat_classical();
            let t_classical = t.elapsed().as_secs_f64();
            let caputo_runs: Vec<(f64, NormTrace)> = std::thread::scope(|inner| {
                let hs: Vec<_> =
                    [0.3, 0.5, 0.7].into_iter().map(|a| inner.spawn(move || (a, heat_caputo(a)))).collect();
                hs.into_iter().map(|h| h.join().unwrap()).collect()
            });
            (c, t_classical, caputo_runs, t.elapsed().as_secs_f64())
        });
        let h4 = sc.spawn(move || timed(&dichotomy));
        let h5 = sc.spawn(move || timed(&degenerate_kirchhoff));
        let h6 = sc.spawn(move || timed(&porous_medium));
        let h7 = sc.spawn(move || timed(&inequality_suite));
        let h8 = sc.spawn(move || timed(&barrier_domination));
        let (classical, t2, caputo_runs, t3) = runs.join().unwrap();
        let c2 = classical_heat(&classical);
        let c3 = caputo_heat(&caputo_runs);
        let c9 = differential(&classical, &caputo_runs);
        let (o1, t1) = h1.join().unwrap();
        let (o4, t4) = h4.join().unwrap();
        let (o5, t5) = h5.join().unwrap();
        let (o6, t6) = h6.join().unwrap();
        let (o7, t7) = h7.join().unwrap();
        let (o8, t8) = h8.join().unwrap();
        vec![
            (1, "mittag-leffler oracle", o1, t1),
            (2, "classical heat exponential rate", c2, t2),
            (3, "caputo heat polynomial slope", c3, t3),
            (4, "dichotomy classification", o4, t4),
            (5, "degenerate kirchhoff", o5, t5),
            (6, "porous medium II bound", o6, t6),
            (7, "inequality suite", o7, t7),
            (8, "barrier domination", o8, t8),
            (9, "discrete differential inequality", c9, t3),
        ]
    });
    let mut failures = 0;
    for (k, name, o, secs) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {k} {tag} [{name}] {} ({secs:.1}s)", o.detail);
        if !o.pass {
            failures += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed in {:.1}s", results.len() - failures, results.len(), start.elapsed().as_secs_f64());
    if failures > 0 {
        std::process::exit(1);
    }
}
