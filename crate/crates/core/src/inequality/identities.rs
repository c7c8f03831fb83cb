//! Randomized checks of the elementary inequalities used in the decay proofs.
//!
//! Every check reports a signed margin normalized by the natural scale of
//! the sample, so a margin of `-1e-12` means a relative violation of that size.

use crate::error::{invalid, Error, Result};
use crate::grid::{lp_norm_unchecked, Field, Grid, InitialCondition};
use crate::operators::kernel::PairTable;
use crate::operators::{gagliardo_with, VectorPotential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::str::FromStr;

pub const IDENTITY_NAMES: [&str; 6] = ["st00", "do1", "kirch_power", "magnetic_pointwise", "poincare", "sobolev_frac"];

/// Margins at or above this count as a pass.
const PASS_MARGIN: f64 = -1e-12;

/// Samples are drawn in blocks so each block gets its own RNG stream and
/// the result does not depend on the thread count.
const BLOCK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentityName {
    St00,
    Do1,
    KirchPower,
    MagneticPointwise,
    Poincare,
    SobolevFrac,
}

impl IdentityName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::St00 => "st00",
            Self::Do1 => "do1",
            Self::KirchPower => "kirch_power",
            Self::MagneticPointwise => "magnetic_pointwise",
            Self::Poincare => "poincare",
            Self::SobolevFrac => "sobolev_frac",
        }
    }

    pub fn all() -> [IdentityName; 6] {
        [Self::St00, Self::Do1, Self::KirchPower, Self::MagneticPointwise, Self::Poincare, Self::SobolevFrac]
    }
}

impl fmt::Display for IdentityName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IdentityName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::all()
            .into_iter()
            .find(|n| n.as_str() == s)
            .map_or_else(|| invalid(format!("unknown identity '{s}' (expected one of {})", IDENTITY_NAMES.join(", "))), Ok)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub name: IdentityName,
    pub samples: usize,
    pub seed: u64,
    pub worst_margin: f64,
    /// Human-readable description of the worst sample.
    pub worst_sample: String,
    pub pass: bool,
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: samples={} seed={} worst_margin={:.3e} at {}",
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.samples,
            self.seed,
            self.worst_margin,
            self.worst_sample
        )
    }
}

/// Runs the named inequality on `n_samples` random samples.
pub fn check_identity(name: &str, n_samples: usize, seed: u64) -> Result<IdentityReport> {
    let id: IdentityName = name.parse()?;
    if n_samples == 0 {
        return invalid("n_samples must be positive");
    }
    let (worst_margin, worst_sample) = match id {
        IdentityName::St00 => blocks(n_samples, seed, st00_sample),
        IdentityName::Do1 => blocks(n_samples, seed, do1_sample),
        IdentityName::KirchPower => kirch_power(n_samples, seed),
        IdentityName::MagneticPointwise => blocks(n_samples, seed, magnetic_sample),
        IdentityName::Poincare => blocks(n_samples, seed, poincare_sample),
        IdentityName::SobolevFrac => sobolev_frac(n_samples, seed)?,
    };
    Ok(IdentityReport {
        name: id,
        samples: n_samples,
        seed,
        worst_margin,
        worst_sample,
        pass: worst_margin >= PASS_MARGIN,
    })
}

type Worst = (f64, String);

fn pick(a: Worst, b: Worst) -> Worst {
    if b.0 < a.0 {
        b
    } else {
        a
    }
}

fn blocks<F>(n: usize, seed: u64, sample: F) -> Worst
where
    F: Fn(&mut ChaCha8Rng) -> Worst + Sync + Send,
{
    let nb = n.div_ceil(BLOCK);
    let per_block = crate::par::map_range(nb, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64 + 1);
        let len = BLOCK.min(n - b * BLOCK);
        let mut worst = (f64::INFINITY, String::new());
        for _ in 0..len {
            worst = pick(worst, sample(&mut rng));
        }
        worst
    });
    per_block.into_iter().fold((f64::INFINITY, String::new()), pick)
}

/// `(lhs - rhs) / max(lhs, rhs)`, zero when both sides vanish.
fn rel_margin(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs) / scale
    }
}

/// Reals with a spread of magnitudes, exact zeros and exact ties included.
fn scalar(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..10) {
        0 => 0.0,
        1 => rng.random_range(-1.0..1.0) * 1e-6,
        2 => rng.random_range(-1.0..1.0) * 1e3,
        _ => rng.random_range(-2.0..2.0),
    }
}

fn vector(rng: &mut ChaCha8Rng, dim: usize) -> [f64; 3] {
    let mut v = [0.0; 3];
    for x in v.iter_mut().take(dim) {
        *x = scalar(rng);
    }
    v
}

fn norm_sq(v: &[f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// `(a² + b²)(|a t - β|² + |b t + α|²) >= |a α + b β|²`.
pub fn st00_margin(a: f64, b: f64, alpha: &[f64; 3], beta: &[f64; 3], t: &[f64; 3]) -> f64 {
    let mut l1 = [0.0; 3];
    let mut l2 = [0.0; 3];
    let mut r = [0.0; 3];
    for k in 0..3 {
        l1[k] = a * t[k] - beta[k];
        l2[k] = b * t[k] + alpha[k];
        r[k] = a * alpha[k] + b * beta[k];
    }
    rel_margin((a * a + b * b) * (norm_sq(&l1) + norm_sq(&l2)), norm_sq(&r))
}

fn st00_sample(rng: &mut ChaCha8Rng) -> Worst {
    let dim = rng.random_range(1..=3);
    let (a, b) = (scalar(rng), scalar(rng));
    let (alpha, beta, t) = (vector(rng, dim), vector(rng, dim), vector(rng, dim));
    let m = st00_margin(a, b, &alpha, &beta, &t);
    (m, format!("a={a:e} b={b:e} alpha={alpha:?} beta={beta:?} t={t:?}"))
}

fn signed_pow(a: f64, e: f64) -> f64 {
    a.signum() * a.abs().powf(e)
}

/// `(a - b)(|a|^(s-2) a - |b|^(s-2) b) >= 0`, normalized by `(|a| + |b|)^s`.
pub fn do1_margin(a: f64, b: f64, s: f64) -> f64 {
    let scale = (a.abs() + b.abs()).powf(s);
    if scale == 0.0 {
        return 0.0;
    }
    (a - b) * (signed_pow(a, s - 1.0) - signed_pow(b, s - 1.0)) / scale
}

fn do1_sample(rng: &mut ChaCha8Rng) -> Worst {
    let s = rng.random_range(1.0..=6.0);
    let a = scalar(rng);
    let b = if rng.random_range(0..8) == 0 { a } else { scalar(rng) };
    (do1_margin(a, b, s), format!("a={a:e} b={b:e} s={s}"))
}

/// Exponents `p = max(2, (s+2)/2)` and `r = (s+2)/(2p)` of the power inequality.
pub fn kirch_exponents(s: f64) -> (f64, f64) {
    let p = f64::max(2.0, 0.5 * (s + 2.0));
    (p, (s + 2.0) / (2.0 * p))
}

/// `g(λ) = (1 - |λ|^r)^(2p) / ((1-λ)^3 (1 - |λ|^(s-2) λ))` on `(-1, 1)`.
pub fn kirch_ratio(lambda: f64, s: f64) -> f64 {
    let (p, r) = kirch_exponents(s);
    (1.0 - lambda.abs().powf(r)).powf(2.0 * p) / ((1.0 - lambda).powi(3) * (1.0 - signed_pow(lambda, s - 1.0)))
}

/// `sup g` over `(-1, 1)`: dense sampling, golden-section refinement around the
/// best node, and the limit at `λ → 1`.
pub fn kirch_sup(s: f64) -> f64 {
    let (p, r) = kirch_exponents(s);
    const N: usize = 4000;
    let lam = |k: usize| -1.0 + 2.0 * k as f64 / N as f64;
    let mut best = (0.0, 0usize);
    for k in 1..N {
        let g = kirch_ratio(lam(k), s);
        if g > best.0 {
            best = (g, k);
        }
    }
    let (mut lo, mut hi) = (lam(best.1 - 1), lam(best.1 + 1).min(1.0 - 1e-9));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let x1 = hi - phi * (hi - lo);
        let x2 = lo + phi * (hi - lo);
        if kirch_ratio(x1, s) > kirch_ratio(x2, s) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let refined = kirch_ratio(0.5 * (lo + hi), s).max(best.0);
    // near λ = 1 the ratio behaves like ε^(2p-4) r^(2p) / (s-1)
    let limit = if p == 2.0 { r.powf(2.0 * p) / (s - 1.0) } else { 0.0 };
    refined.max(limit)
}

/// `||a|^r - |b|^r|^(2p) <= c (a-b)^3 (|a|^(s-2)a - |b|^(s-2)b)` with `c = sup g`,
/// normalized by `|a|^(s+2)` where `|a| >= |b|`.
pub fn kirch_power_margin(a: f64, b: f64, s: f64, c: f64) -> f64 {
    let (a, b) = if a.abs() >= b.abs() { (a, b) } else { (b, a) };
    let scale = a.abs().powf(s + 2.0);
    if scale == 0.0 {
        return 0.0;
    }
    let (p, r) = kirch_exponents(s);
    let lhs = (a.abs().powf(r) - b.abs().powf(r)).abs().powf(2.0 * p);
    let rhs = (a - b).powi(3) * (signed_pow(a, s - 1.0) - signed_pow(b, s - 1.0));
    (c * rhs - lhs) / scale
}

fn kirch_power(n: usize, seed: u64) -> Worst {
    const S_NODES: usize = 50;
    let s_at = |k: usize| 1.1 + (6.0 - 1.1) * k as f64 / (S_NODES - 1) as f64;
    let sups: Vec<f64> = crate::par::map_range(S_NODES, |k| kirch_sup(s_at(k)));
    blocks(n, seed, |rng| {
        let k = rng.random_range(0..S_NODES);
        let s = s_at(k);
        // small slack for the finite sampling of the supremum
        let c = sups[k] * (1.0 + 1e-6);
        let a = scalar(rng);
        let b = match rng.random_range(0..6) {
            0 => a,
            1 => -a,
            2 => a * (1.0 - rng.random_range(0.0..1e-3)),
            _ => scalar(rng),
        };
        (kirch_power_margin(a, b, s, c), format!("a={a:e} b={b:e} s={s} c={c}"))
    })
}

/// `Re{ū(x)(u(x) - e^{iθ} u(y))} >= |u(x)| (|u(x)| - |u(y)|)`,
/// normalized by `|u(x)|² + |u(y)|²`.
pub fn magnetic_margin(ux: num_complex::Complex64, uy: num_complex::Complex64, theta: f64) -> f64 {
    let lhs = (ux.conj() * (ux - num_complex::Complex64::from_polar(1.0, theta) * uy)).re;
    let rhs = ux.norm() * (ux.norm() - uy.norm());
    let scale = ux.norm_sqr() + uy.norm_sqr();
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs) / scale
    }
}

fn magnetic_sample(rng: &mut ChaCha8Rng) -> Worst {
    let ux = num_complex::Complex64::new(scalar(rng), scalar(rng));
    let uy = num_complex::Complex64::new(scalar(rng), scalar(rng));
    let linear = rng.random_bool(0.5);
    let mut p = || rng.random_range(-3.0..3.0);
    let a = if !linear {
        VectorPotential::Constant([p(), p()])
    } else {
        VectorPotential::Linear { a0: [p(), p()], m: [[p(), p()], [p(), p()]] }
    };
    let x = [p(), p()];
    let mut y = [p(), p()];
    if x == y {
        y[0] += 1.0;
    }
    let mid = [0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])];
    let am = a.eval(mid);
    let theta = (x[0] - y[0]) * am[0] + (x[1] - y[1]) * am[1];
    (magnetic_margin(ux, uy, theta), format!("u(x)={ux} u(y)={uy} theta={theta}"))
}

fn random_grid(rng: &mut ChaCha8Rng) -> Grid {
    if rng.random_bool(0.5) {
        let n = rng.random_range(4..=64);
        let a = rng.random_range(-2.0..0.0);
        let b = a + rng.random_range(0.5..3.0);
        Grid::new_1d(a, b, n).expect("valid 1D grid")
    } else {
        let nx = rng.random_range(3..=16);
        let ny = rng.random_range(3..=16);
        let lx = rng.random_range(0.5..3.0);
        let ly = rng.random_range(0.5..3.0);
        Grid::new_2d((0.0, lx), (0.0, ly), [nx, ny]).expect("valid 2D grid")
    }
}

fn random_sample_field(rng: &mut ChaCha8Rng, grid: &Grid) -> Field {
    match rng.random_range(0..8) {
        0 => InitialCondition::Eigenfunction { amplitude: 1.0 }.build(grid),
        1 => InitialCondition::Bump { amplitude: 1.0, radius: rng.random_range(0.2..1.0) }.build(grid),
        2 => {
            let mut v = vec![0.0; grid.len()];
            v[rng.random_range(0..grid.len())] = 1.0;
            Field::from_real(*grid, &v).expect("matching length")
        }
        3 => InitialCondition::RandomComplex { amplitude: 1.0, seed: rng.random(), smoothness: rng.random_range(0..5) }
            .build(grid),
        _ => InitialCondition::Random {
            amplitude: 1.0,
            seed: rng.random(),
            smoothness: rng.random_range(0..5),
            nonnegative: rng.random_bool(0.3),
        }
        .build(grid),
    }
}

/// Discrete Poincaré inequality `‖u‖₂² <= ‖∇u‖₂² / λ₁ʰ` with the sharp
/// constant of the grid; equality holds for the first eigenfunction.
fn poincare_sample(rng: &mut ChaCha8Rng) -> Worst {
    let g = random_grid(rng);
    let u = random_sample_field(rng, &g);
    let l2 = lp_norm_unchecked(u.values(), 2.0, g.cell_volume()).powi(2);
    let m = rel_margin(u.gradient_sq_norm() / g.first_laplacian_eigenvalue(), l2);
    (m, format!("dim={} n={} |u|_2^2={l2:e}", g.dim(), g.n(0)))
}

const SOBOLEV_SIGMA: f64 = 0.25;
const SOBOLEV_Q: [f64; 2] = [2.0, 4.0];
const SOBOLEV_N: [usize; 3] = [49, 99, 199];

/// `‖v‖_q² <= C [v]²` on `(-1, 1)` with `σ = 1/4`, `q ∈ {2, 4}`.
///
/// `C` is the largest ratio seen on the coarsest grid; the finer grids must
/// then satisfy the inequality with `2C`.
fn sobolev_frac(n: usize, seed: u64) -> Result<Worst> {
    let tables: Vec<(Grid, PairTable)> = SOBOLEV_N
        .iter()
        .map(|&m| {
            let g = Grid::new_1d(-1.0, 1.0, m)?;
            Ok((g, PairTable::fractional_laplacian(&g, SOBOLEV_SIGMA)))
        })
        .collect::<Result<_>>()?;
    let per_level = n.div_ceil(SOBOLEV_N.len()).max(1);
    let ratios = |level: usize| -> Vec<[f64; 2]> {
        let (g, table) = &tables[level];
        let nb = per_level.div_ceil(BLOCK);
        crate::par::map_range(nb, |b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((level as u64) << 32) + b as u64 + 1);
            let len = BLOCK.min(per_level - b * BLOCK);
            (0..len)
                .map(|_| {
                    let u = random_sample_field(&mut rng, g);
                    let semi = gagliardo_with(table, &u);
                    SOBOLEV_Q.map(|q| lp_norm_unchecked(u.values(), q, g.cell_volume()).powi(2) / semi)
                })
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect()
    };
    let mut c = [0.0f64; 2];
    for r in ratios(0) {
        c[0] = c[0].max(r[0]);
        c[1] = c[1].max(r[1]);
    }
    let mut worst = (f64::INFINITY, String::new());
    for level in 1..SOBOLEV_N.len() {
        for r in ratios(level) {
            for k in 0..2 {
                // margin of 2C [v]² - ‖v‖_q², relative to 2C [v]²
                let m = 1.0 - r[k] / (2.0 * c[k]);
                if m < worst.0 {
                    worst = (m, format!("n={} q={} ratio={:e} C={:e}", SOBOLEV_N[level], SOBOLEV_Q[k], r[k], c[k]));
                }
            }
        }
    }
    Ok(worst)
}
