use fracdecay::barriers::{check_comparison, mittag_leffler, solve_scalar_ode, BarrierSpec, ScalarOde};
use fracdecay::decay::{fit_samples, DecayKind, WindowPolicy};
use fracdecay::grid::InitialCondition;
use fracdecay::time::{l1_weights, simulate, CaputoNormalization, SimulationConfig, TimeDerivativeSpec};
use fracdecay::{DiffusionOperator, Grid};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn l1_weights_are_positive_decreasing_and_telescope(alpha in 0.01f64..0.99, len in 2usize..400) {
        let b = l1_weights(len, alpha);
        prop_assert!(b.iter().all(|&w| w > 0.0 && w <= 1.0));
        prop_assert!(b.windows(2).all(|w| w[1] < w[0]));
        let sum: f64 = b.iter().sum();
        prop_assert!((sum - (len as f64).powf(1.0 - alpha)).abs() < 1e-9 * sum);
    }

    #[test]
    fn mittag_leffler_is_a_decreasing_fraction(alpha in 0.1f64..0.95, x in 0.0f64..30.0, dx in 0.01f64..2.0) {
        let a = mittag_leffler(alpha, -x).unwrap();
        let b = mittag_leffler(alpha, -x - dx).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0);
        prop_assert!(b < a);
    }

    #[test]
    fn fit_recovers_power_laws(p in 0.2f64..2.0, c in 0.1f64..10.0) {
        let times: Vec<f64> = (0..200).map(|k| 1000f64.powf(k as f64 / 199.0)).collect();
        let norms: Vec<f64> = times.iter().map(|t| c / (1.0 + t.powf(p))).collect();
        let f = fit_samples(&times, &norms, WindowPolicy::Range(1.0, 1000.0), None).unwrap();
        prop_assert_eq!(f.kind, DecayKind::Polynomial);
        prop_assert!((f.exponent - p).abs() < 1e-3 * p.max(1.0));
    }

    #[test]
    fn scalar_solution_stays_below_its_barrier(alpha in 0.2f64..0.9, gamma in 1.0f64..3.0, l1 in 0.1f64..1.0) {
        let td = TimeDerivativeSpec::new(l1, 1.0 - l1, alpha, CaputoNormalization::Standard).unwrap();
        let ode = ScalarOde::new(td, 1.0, gamma).unwrap();
        let spec = BarrierSpec::mixed(1.0, 1.0, gamma, alpha).unwrap();
        let w = spec.trajectory(ode, 5.0, 0.01).unwrap();
        let v = solve_scalar_ode(&ode, 0.9, 5.0, 0.01).unwrap();
        let rep = check_comparison(&w, &v, &ode).unwrap();
        prop_assert!(rep.ordered, "{:?}", rep);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn implicit_runs_have_nonincreasing_norms(
        seed in 0u64..1000,
        sigma in 0.2f64..0.8,
        lambda1 in 0.0f64..1.0,
        alpha in 0.2f64..0.8,
        s in 1.0f64..4.0,
    ) {
        let g = Grid::unit_interval(40).unwrap();
        let td = TimeDerivativeSpec::new(lambda1, 1.0 - lambda1, alpha, CaputoNormalization::Standard).unwrap();
        for op in [DiffusionOperator::Laplacian { d: 1.0 }, DiffusionOperator::FractionalLaplacian { sigma, d: 1.0 }] {
            let u0 = InitialCondition::Random { amplitude: 1.0, seed, smoothness: 3, nonnegative: true };
            let mut cfg = SimulationConfig::new(g, op, td, u0, 0.01, 0.5);
            cfg.s_list = vec![2.0, s];
            let tr = simulate(&cfg).unwrap();
            // positivity-preserving monotone schemes: every L^s norm decays, not only L^2
            for k in 0..2 {
                let n = &tr.norms[k];
                prop_assert!(n.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
            }
        }
    }
}
