use super::{Field, Grid};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Initial data menu. Every choice vanishes at the boundary of the box.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// Product of first Dirichlet sine modes, scaled by `amplitude`.
    Eigenfunction { amplitude: f64 },
    /// `exp(1 - 1/(1 - r^2))` on a ball of relative radius `radius` around the box center.
    Bump { amplitude: f64, radius: f64 },
    /// Indicator of the middle half of the box after `passes` averaging sweeps.
    SmoothedIndicator { amplitude: f64, passes: usize },
    /// Smoothed random field; `nonnegative` takes the modulus first.
    Random { amplitude: f64, seed: u64, smoothness: usize, nonnegative: bool },
    /// Smoothed random complex field.
    RandomComplex { amplitude: f64, seed: u64, smoothness: usize },
    Zero,
}

impl InitialCondition {
    pub fn build(&self, grid: &Grid) -> Field {
        let g = *grid;
        match *self {
            Self::Eigenfunction { amplitude } => Field::from_real_fn(g, |x| {
                let mut v = amplitude;
                for a in 0..g.dim() {
                    v *= (PI * (x[a] - g.lo(a)) / g.length(a)).sin();
                }
                v
            }),
            Self::Bump { amplitude, radius } => Field::from_real_fn(g, |x| {
                let mut r2 = 0.0;
                for a in 0..g.dim() {
                    let c = 0.5 * (g.lo(a) + g.hi(a));
                    let half = 0.5 * g.length(a) * radius;
                    r2 += ((x[a] - c) / half).powi(2);
                }
                if r2 < 1.0 {
                    amplitude * (1.0 - 1.0 / (1.0 - r2)).exp()
                } else {
                    0.0
                }
            }),
            Self::SmoothedIndicator { amplitude, passes } => {
                let raw = Field::from_real_fn(g, |x| {
                    let inside = (0..g.dim()).all(|a| {
                        let t = (x[a] - g.lo(a)) / g.length(a);
                        (0.25..=0.75).contains(&t)
                    });
                    if inside {
                        amplitude
                    } else {
                        0.0
                    }
                });
                smooth(&raw, passes)
            }
            Self::Random { amplitude, seed, smoothness, nonnegative } => {
                let f = random_field(grid, seed, smoothness);
                if nonnegative {
                    f.map(|v| Complex64::new(amplitude * v.norm(), 0.0))
                } else {
                    f.scale(Complex64::new(amplitude, 0.0))
                }
            }
            Self::RandomComplex { amplitude, seed, smoothness } => {
                random_complex_field(grid, seed, smoothness).scale(Complex64::new(amplitude, 0.0))
            }
            Self::Zero => Field::zeros(g),
        }
    }
}

/// White noise in `[-1, 1]` followed by `smoothness` nearest-neighbour averaging passes.
pub fn random_field(grid: &Grid, seed: u64, smoothness: usize) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let raw = Field::from_real(*grid, &vals).expect("length matches grid");
    smooth(&raw, smoothness)
}

/// Complex analogue of [`random_field`] with independent real and imaginary noise.
pub fn random_complex_field(grid: &Grid, seed: u64, smoothness: usize) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals: Vec<Complex64> = (0..grid.len())
        .map(|_| Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
        .collect();
    let raw = Field::new(*grid, vals).expect("length matches grid");
    smooth(&raw, smoothness)
}

// Average over the node and its axis neighbours, exterior counted as 0.
fn smooth(f: &Field, passes: usize) -> Field {
    let g = *f.grid();
    let mut cur = f.clone();
    for _ in 0..passes {
        let values = (0..g.len())
            .map(|i| {
                let [ix, iy] = g.split(i);
                let (ix, iy) = (ix as isize, iy as isize);
                let mut acc = cur.at(ix, iy) + cur.at(ix - 1, iy) + cur.at(ix + 1, iy);
                let mut cnt = 3.0;
                if g.dim() == 2 {
                    acc += cur.at(ix, iy - 1) + cur.at(ix, iy + 1);
                    cnt = 5.0;
                }
                acc / cnt
            })
            .collect();
        cur = Field::new(g, values).expect("same grid");
    }
    cur
}
