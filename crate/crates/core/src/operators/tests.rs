use super::*;
use crate::grid::InitialCondition;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn sine(n: usize) -> Field {
    let g = Grid::unit_interval(n).unwrap();
    Field::from_real_fn(g, |x| (PI * x[0]).sin())
}

fn max_diff(a: &Field, b: &Field) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn laplacian_of_sine_is_eigenvalue_times_sine() {
    let u = sine(99);
    let n = apply(&DiffusionOperator::Laplacian { d: 2.0 }, &u).unwrap();
    let expect = u.scale(c(2.0 * PI * PI));
    assert!(max_diff(&n, &expect) < 2e-3 * expect.max_abs());
}

// (-Δ)^σ (1-|x|²)_+^(1+σ) = 4^σ Γ(2+σ) Γ(n/2+σ)/Γ(n/2) (1 - (1 + 2σ/n)|x|²) in the ball
fn dyda(dim: usize, sigma: f64, r2: f64) -> f64 {
    let nd = dim as f64;
    4f64.powf(sigma) * gamma(2.0 + sigma) * gamma(0.5 * nd + sigma) / gamma(0.5 * nd)
        * (1.0 - (1.0 + 2.0 * sigma / nd) * r2)
}

fn frac_lap_error_at_origin(sigma: f64, n: usize) -> f64 {
    let g = Grid::new_1d(-1.5, 1.5, n).unwrap();
    let u = Field::from_real_fn(g, |x| (1.0 - x[0] * x[0]).max(0.0).powf(1.0 + sigma));
    let op = DiscreteOperator::new(
        &DiffusionOperator::FractionalLaplacian { sigma, d: 1.0 },
        &g,
        KernelNormalization::Standard,
    )
    .unwrap();
    let v = op.apply(&u).unwrap().values()[(n - 1) / 2].re;
    (v - dyda(1, sigma, 0.0)).abs() / dyda(1, sigma, 0.0)
}

#[test]
fn fractional_laplacian_converges_to_closed_form_in_1d() {
    for sigma in [0.25, 0.5, 0.75] {
        let e1 = frac_lap_error_at_origin(sigma, 149);
        let e2 = frac_lap_error_at_origin(sigma, 299);
        let e3 = frac_lap_error_at_origin(sigma, 599);
        assert!(e3 < 0.02, "sigma={sigma}: {e3}");
        let order = (e1 / e3).log2() / 2.0;
        assert!(order >= (2.0 - 2.0 * sigma).min(1.0) - 0.15, "sigma={sigma}: {e1} {e2} {e3} order {order}");
    }
}

#[test]
fn fractional_laplacian_of_constant_sees_only_the_tail() {
    let sigma = 0.3;
    let g = Grid::unit_interval(399).unwrap();
    let one = Field::from_real_fn(g, |_| 1.0);
    let v = apply(&DiffusionOperator::FractionalLaplacian { sigma, d: 1.0 }, &one).unwrap();
    let i = 199;
    let x = g.node(0, i);
    let exact = (x.powf(-2.0 * sigma) + (1.0 - x).powf(-2.0 * sigma)) / (2.0 * sigma);
    assert!((v.values()[i].re - exact).abs() < 0.01 * exact);
}

#[test]
fn discrete_eigenfunction_of_the_laplacian() {
    let n = 49;
    let u = sine(n);
    let h = u.grid().h(0);
    let lam = 2.0 / (h * h) * (1.0 - (PI * h).cos());
    let v = apply(&DiffusionOperator::Laplacian { d: 1.0 }, &u).unwrap();
    assert!(max_diff(&v, &u.scale(c(lam))) < 1e-10 * lam);
    assert!((u.grid().first_laplacian_eigenvalue() - lam).abs() < 1e-9 * lam);
}

#[test]
fn laplacian_of_bump_converges_at_second_order() {
    let bump = |x: f64| if x.abs() < 1.0 { (1.0 - 1.0 / (1.0 - x * x)).exp() } else { 0.0 };
    // -u''(0.5) from a fine central difference
    let exact = {
        let d = 1e-4;
        -(bump(0.5 + d) - 2.0 * bump(0.5) + bump(0.5 - d)) / (d * d)
    };
    let err = |n: usize| {
        let g = Grid::new_1d(-1.5, 1.5, n).unwrap();
        let u = Field::from_real_fn(g, |x| bump(x[0]));
        let v = apply(&DiffusionOperator::Laplacian { d: 1.0 }, &u).unwrap();
        let i = (0..n).min_by(|&a, &b| (g.node(0, a) - 0.5).abs().total_cmp(&(g.node(0, b) - 0.5).abs())).unwrap();
        assert!((g.node(0, i) - 0.5).abs() < 1e-12);
        (v.values()[i].re - exact).abs()
    };
    let order = (err(59) / err(239)).log2() / 2.0;
    assert!(order >= 1.5, "{order}");
}

#[test]
fn fractional_laplacian_matches_closed_form_in_2d() {
    let sigma = 0.5;
    let g = Grid::new_2d((-1.2, 1.2), (-1.2, 1.2), [39, 39]).unwrap();
    let u = Field::from_real_fn(g, |x| (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0).powf(1.0 + sigma));
    let op = DiscreteOperator::new(
        &DiffusionOperator::FractionalLaplacian { sigma, d: 1.0 },
        &g,
        KernelNormalization::Standard,
    )
    .unwrap();
    let n = op.apply(&u).unwrap();
    let centre = g.join(19, 19);
    let e = dyda(2, sigma, 0.0);
    assert!((n.values()[centre].re - e).abs() < 0.03 * e, "{} vs {e}", n.values()[centre].re);
}

#[test]
fn linear_operators_are_hermitian_and_positive() {
    let g1 = Grid::unit_interval(24).unwrap();
    let g2 = Grid::new_2d((0.0, 1.0), (0.0, 1.5), [6, 7]).unwrap();
    let a = VectorPotential::Linear { a0: [0.3, -0.2], m: [[0.0, 1.0], [-1.0, 0.5]] };
    let ops = [
        DiffusionOperator::FractionalLaplacian { sigma: 0.4, d: 1.0 },
        DiffusionOperator::Magnetic { a },
        DiffusionOperator::FractionalMagnetic { sigma: 0.6, a },
        DiffusionOperator::AnisotropicFractional { axes: vec![(1.0, 0.3)] },
    ];
    for g in [g1, g2] {
        for op in &ops {
            let mut op = op.clone();
            if let DiffusionOperator::AnisotropicFractional { axes } = &mut op {
                if g.dim() == 2 {
                    axes.push((0.5, 0.8));
                }
            }
            let d = DiscreteOperator::new(&op, &g, KernelNormalization::Bare).unwrap();
            let m = d.dense_matrix().unwrap();
            let herm = (&m - m.adjoint()).norm();
            assert!(herm < 1e-10 * m.norm(), "{op}: {herm}");
            let eig = nalgebra::SymmetricEigen::new(m).eigenvalues;
            assert!(eig.min() > 0.0, "{op}");
        }
    }
}

#[test]
fn magnetic_operators_are_gauge_covariant() {
    let k = 1.7;
    let u = sine(40);
    let g = *u.grid();
    let phase = Field::from_fn(g, |x| Complex64::from_polar(1.0, k * x[0]));
    let twisted = Field::new(g, u.values().iter().zip(phase.values()).map(|(a, b)| a * b).collect()).unwrap();
    let pairs = [
        (DiffusionOperator::Magnetic { a: VectorPotential::Constant([k, 0.0]) }, DiffusionOperator::Laplacian { d: 1.0 }),
        (
            DiffusionOperator::FractionalMagnetic { sigma: 0.3, a: VectorPotential::Constant([k, 0.0]) },
            DiffusionOperator::FractionalLaplacian { sigma: 0.3, d: 1.0 },
        ),
    ];
    for (mag, plain) in pairs {
        let lhs = apply(&mag, &twisted).unwrap();
        let base = apply(&plain, &u).unwrap();
        let rhs = Field::new(g, base.values().iter().zip(phase.values()).map(|(a, b)| a * b).collect()).unwrap();
        assert!(max_diff(&lhs, &rhs) < 1e-9 * rhs.max_abs(), "{mag}");
    }
}

#[test]
fn special_cases_reduce_to_the_linear_operators() {
    let u = InitialCondition::Random { amplitude: 1.0, seed: 9, smoothness: 2, nonnegative: false }
        .build(&Grid::unit_interval(30).unwrap());
    let lap = apply(&DiffusionOperator::Laplacian { d: 1.0 }, &u).unwrap();
    let pl = apply(&DiffusionOperator::PLaplacianPower { p: 2.0, m: 1.0 }, &u).unwrap();
    assert!(max_diff(&lap, &pl) < 1e-9 * lap.max_abs());

    let fl = apply(&DiffusionOperator::FractionalLaplacian { sigma: 0.35, d: 1.0 }, &u).unwrap();
    let fpl = apply(&DiffusionOperator::FractionalPLaplacian { sigma: 0.35, p: 2.0 }, &u).unwrap();
    let an = apply(&DiffusionOperator::AnisotropicFractional { axes: vec![(1.0, 0.35)] }, &u).unwrap();
    let pm = apply(&DiffusionOperator::PorousMediumI { sigma: 0.35, m: 1.0 }, &u).unwrap();
    for other in [&fpl, &an, &pm] {
        assert!(max_diff(&fl, other) < 1e-9 * fl.max_abs());
    }

    // small amplitude: mean curvature flattens to the Laplacian
    let eps = 1e-4;
    let small = u.scale(c(eps));
    let mc = apply(&DiffusionOperator::MeanCurvature, &small).unwrap().scale(c(1.0 / eps));
    assert!(max_diff(&mc, &lap) < 1e-3 * lap.max_abs());
}

#[test]
fn fractional_mean_curvature_linearizes_to_fractional_laplacian() {
    let sigma = 0.4;
    let u = sine(80);
    let eps = 1e-5;
    let fmc = apply(&DiffusionOperator::FractionalMeanCurvature { sigma }, &u.scale(c(eps)))
        .unwrap()
        .scale(c(1.0 / eps));
    let lin = apply(&DiffusionOperator::FractionalLaplacian { sigma: 0.5 * (1.0 + sigma), d: 1.0 }, &u).unwrap();
    assert!(max_diff(&fmc, &lin) < 1e-6 * lin.max_abs(), "{}", max_diff(&fmc, &lin) / lin.max_abs());
    // and it is odd and saturating
    let big = apply(&DiffusionOperator::FractionalMeanCurvature { sigma }, &u.scale(c(1e3))).unwrap();
    let neg = apply(&DiffusionOperator::FractionalMeanCurvature { sigma }, &u.scale(c(-1e3))).unwrap();
    assert!(max_diff(&big, &neg.scale(c(-1.0))) < 1e-9 * big.max_abs());
    assert!(big.max_abs() < 1e3 * fmc.max_abs());
}

#[test]
fn riesz_potential_of_parabola_at_centre() {
    let sigma = 0.3;
    let g = Grid::new_1d(-1.0, 1.0, 1999).unwrap();
    let u = Field::from_real_fn(g, |x| 1.0 - x[0] * x[0]);
    let p = riesz_convolution(&u, sigma).unwrap();
    let exact = 2.0 * riesz_constant(1, sigma) * (1.0 / (2.0 * sigma) - 1.0 / (2.0 * sigma + 2.0));
    let got = p.values()[999].re;
    assert!((got - exact).abs() < 2e-3 * exact, "{got} vs {exact}");
}

#[test]
fn kirchhoff_operators_scale_their_base() {
    let u = sine(50);
    let classical = DiffusionOperator::KirchhoffClassical { m0: 0.5, b: 2.0 };
    let n = apply(&classical, &u).unwrap();
    let m = kirchhoff_prefactor(&classical, &u).unwrap();
    let lap = apply(&DiffusionOperator::Laplacian { d: 1.0 }, &u).unwrap();
    assert!(max_diff(&n, &lap.scale(c(m))) < 1e-9 * n.max_abs());
    // ‖∇ sin(πx)‖² = π²/2
    assert!((u.gradient_sq_norm() - 0.5 * PI * PI).abs() < 5e-3);

    let sigma = 0.45;
    let frac = DiffusionOperator::KirchhoffFractional { sigma, m0: 0.0, b: 1.0 };
    let n = apply(&frac, &u).unwrap();
    let gag = gagliardo_seminorm_sq(&u, sigma);
    let fl = apply(&DiffusionOperator::FractionalLaplacian { sigma, d: 1.0 }, &u).unwrap();
    assert!(max_diff(&n, &fl.scale(c(2.0 * gag))) < 1e-9 * n.max_abs());
    let inner = 2.0 * u.inner(&fl).re;
    assert!((gag - inner).abs() < 1e-10 * gag);
}

#[test]
fn structural_gamma_table() {
    let cases: Vec<(DiffusionOperator, usize, f64, Option<f64>)> = vec![
        (DiffusionOperator::Laplacian { d: 1.0 }, 2, 2.0, Some(1.0)),
        (DiffusionOperator::PLaplacianPower { p: 3.0, m: 2.0 }, 1, 2.0, Some(4.0)),
        (DiffusionOperator::FractionalPLaplacian { sigma: 0.5, p: 3.0 }, 1, 2.0, Some(2.0)),
        (
            DiffusionOperator::SumFractionalPLaplacians {
                terms: vec![PTerm { beta: 1.0, sigma: 0.3, p: 2.5 }, PTerm { beta: 1.0, sigma: 0.6, p: 4.0 }],
            },
            1,
            2.0,
            Some(3.0),
        ),
        (DiffusionOperator::PorousMediumI { sigma: 0.5, m: 2.0 }, 1, 2.0, Some(2.0)),
        (DiffusionOperator::PorousMediumII { sigma: 0.25 }, 1, 2.0, Some(2.0)),
        (DiffusionOperator::PorousMediumII { sigma: 0.25 }, 1, 1.0, None),
        (DiffusionOperator::KirchhoffClassical { m0: 0.0, b: 1.0 }, 2, 10.0, Some(3.0)),
        (DiffusionOperator::KirchhoffClassical { m0: 1.0, b: 1.0 }, 2, 10.0, Some(1.0)),
        (DiffusionOperator::KirchhoffFractional { sigma: 0.2, m0: 0.0, b: 1.0 }, 1, 2.0, Some(3.0)),
        (DiffusionOperator::KirchhoffFractional { sigma: 0.2, m0: 0.0, b: 1.0 }, 1, 12.0, None),
        (DiffusionOperator::FractionalMeanCurvature { sigma: 0.5 }, 1, 2.0, Some(1.0)),
    ];
    for (op, dim, s, want) in cases {
        assert_eq!(op.structural_gamma(dim, s), want, "{op} dim={dim} s={s}");
    }
}

#[test]
fn validation_rejects_bad_parameters() {
    assert!(DiffusionOperator::FractionalLaplacian { sigma: 1.0, d: 1.0 }.validate(1).is_err());
    assert!(DiffusionOperator::PLaplacianPower { p: 1.0, m: 1.0 }.validate(1).is_err());
    assert!(DiffusionOperator::PorousMediumII { sigma: 0.6 }.validate(1).is_err());
    assert!(DiffusionOperator::PorousMediumII { sigma: 0.6 }.validate(2).is_ok());
    assert!(DiffusionOperator::KirchhoffClassical { m0: 0.0, b: 0.0 }.validate(1).is_err());
    assert!(DiffusionOperator::AnisotropicFractional { axes: vec![(1.0, 0.5)] }.validate(2).is_err());
    assert!(DiffusionOperator::Laplacian { d: 1.0 }.validate(3).is_err());
}

#[test]
fn tridiagonal_agrees_with_apply() {
    let u = InitialCondition::RandomComplex { amplitude: 1.0, seed: 1, smoothness: 1 }
        .build(&Grid::unit_interval(20).unwrap());
    let a = VectorPotential::Linear { a0: [0.5, 0.0], m: [[2.0, 0.0], [0.0, 0.0]] };
    for op in [DiffusionOperator::Laplacian { d: 1.0 }, DiffusionOperator::Magnetic { a }] {
        let d = DiscreteOperator::new(&op, u.grid(), KernelNormalization::Bare).unwrap();
        let [lo, di, up] = d.tridiagonal().unwrap();
        let v = u.values();
        let n = v.len();
        let mv: Vec<Complex64> = (0..n)
            .map(|i| {
                let mut s = di[i] * v[i];
                if i > 0 {
                    s += lo[i] * v[i - 1];
                }
                if i + 1 < n {
                    s += up[i] * v[i + 1];
                }
                s
            })
            .collect();
        let ref_ = d.apply(&u).unwrap();
        assert!(max_diff(&Field::new(*u.grid(), mv).unwrap(), &ref_) < 1e-9 * ref_.max_abs());
    }
}

#[test]
fn porous_two_is_conservative_in_the_interior_sum() {
    // the face fluxes telescope, only the two boundary faces remain
    let g = Grid::unit_interval(60).unwrap();
    let u = InitialCondition::Bump { amplitude: 1.0, radius: 0.5 }.build(&g);
    let n = apply(&DiffusionOperator::PorousMediumII { sigma: 0.25 }, &u).unwrap();
    let total: f64 = n.values().iter().map(|v| v.re).sum();
    assert!(total.abs() < 1e-10 * n.max_abs());
}

fn menu() -> Vec<DiffusionOperator> {
    let a = VectorPotential::Linear { a0: [0.4, 0.1], m: [[0.0, -0.5], [0.5, 0.0]] };
    vec![
        DiffusionOperator::Laplacian { d: 1.0 },
        DiffusionOperator::FractionalLaplacian { sigma: 0.4, d: 1.0 },
        DiffusionOperator::PLaplacianPower { p: 3.0, m: 1.5 },
        DiffusionOperator::FractionalPLaplacian { sigma: 0.6, p: 2.5 },
        DiffusionOperator::SumFractionalPLaplacians {
            terms: vec![PTerm { beta: 1.0, sigma: 0.3, p: 2.0 }, PTerm { beta: 0.5, sigma: 0.7, p: 3.0 }],
        },
        DiffusionOperator::PorousMediumI { sigma: 0.5, m: 2.0 },
        DiffusionOperator::PorousMediumII { sigma: 0.25 },
        DiffusionOperator::KirchhoffClassical { m0: 0.0, b: 1.0 },
        DiffusionOperator::KirchhoffFractional { sigma: 0.5, m0: 1.0, b: 0.5 },
        DiffusionOperator::Magnetic { a },
        DiffusionOperator::FractionalMagnetic { sigma: 0.5, a },
        DiffusionOperator::MeanCurvature,
        DiffusionOperator::FractionalMeanCurvature { sigma: 0.5 },
    ]
}

#[test]
fn every_operator_has_nonnegative_energy() {
    let g1 = Grid::unit_interval(40).unwrap();
    let g2 = Grid::new_2d((0.0, 1.0), (0.0, 1.0), [9, 9]).unwrap();
    for g in [g1, g2] {
        let mut ops = menu();
        ops.push(DiffusionOperator::AnisotropicFractional { axes: vec![(1.0, 0.4); g.dim()] });
        for op in ops {
            for seed in 0..5 {
                let u = if op.is_real() {
                    InitialCondition::Random { amplitude: 2.0, seed, smoothness: 2, nonnegative: op == DiffusionOperator::PorousMediumII { sigma: 0.25 } }
                        .build(&g)
                } else {
                    InitialCondition::RandomComplex { amplitude: 2.0, seed, smoothness: 2 }.build(&g)
                };
                let n = apply(&op, &u).unwrap();
                let e = u.inner(&n).re;
                assert!(e >= 0.0, "{op} seed {seed}: {e}");
                if op.is_real() {
                    assert!(n.imag_residue() < 1e-12, "{op}");
                }
            }
        }
    }
}

#[test]
fn listed_reductions_hold_on_random_fields() {
    let g = Grid::unit_interval(35).unwrap();
    let u = InitialCondition::RandomComplex { amplitude: 1.0, seed: 4, smoothness: 1 }.build(&g);
    let r = InitialCondition::Random { amplitude: 1.0, seed: 5, smoothness: 1, nonnegative: false }.build(&g);
    let pairs = [
        (DiffusionOperator::Magnetic { a: VectorPotential::zero() }, DiffusionOperator::Laplacian { d: 1.0 }, &u),
        (
            DiffusionOperator::FractionalMagnetic { sigma: 0.6, a: VectorPotential::zero() },
            DiffusionOperator::FractionalLaplacian { sigma: 0.6, d: 1.0 },
            &u,
        ),
        (DiffusionOperator::KirchhoffClassical { m0: 1.0, b: 0.0 }, DiffusionOperator::Laplacian { d: 1.0 }, &u),
        (
            DiffusionOperator::SumFractionalPLaplacians { terms: vec![PTerm { beta: 1.0, sigma: 0.4, p: 3.0 }] },
            DiffusionOperator::FractionalPLaplacian { sigma: 0.4, p: 3.0 },
            &r,
        ),
    ];
    for (a, b, f) in pairs {
        let x = apply(&a, f).unwrap();
        let y = apply(&b, f).unwrap();
        assert!(max_diff(&x, &y) <= 1e-10 * y.max_abs(), "{a}");
    }
}

#[test]
fn gagliardo_is_quadratic_and_matches_energy() {
    let g = Grid::unit_interval(30).unwrap();
    let u = InitialCondition::RandomComplex { amplitude: 1.0, seed: 2, smoothness: 2 }.build(&g);
    let sigma = 0.3;
    let a = gagliardo_seminorm_sq(&u, sigma);
    let b = gagliardo_seminorm_sq(&u.scale(c(2.0)), sigma);
    assert!((b - 4.0 * a).abs() < 1e-12 * b);
    let n = apply(&DiffusionOperator::FractionalLaplacian { sigma, d: 1.0 }, &u).unwrap();
    assert!((a - 2.0 * u.inner(&n).re).abs() < 1e-12 * a);
    assert_eq!(gagliardo_seminorm_sq(&Field::zeros(g), sigma), 0.0);
}
