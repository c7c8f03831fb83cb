//! Uniform grids on boxes and complex grid functions with exterior-zero semantics.

mod init;

pub use init::{random_complex_field, random_field, InitialCondition};

use crate::error::{invalid, Error, Result};
use num_complex::Complex64;

/// Uniform mesh of interior nodes over a 1D interval or 2D rectangle.
///
/// Interior nodes sit at `a + i h`, `i = 1..=n`, with `h = (b - a) / (n + 1)`.
/// Everything outside the interior nodes is zero by convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    n: [usize; 2],
    h: [f64; 2],
}

impl Grid {
    pub fn new_1d(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::build(1, [a, 0.0], [b, 1.0], [n, 1])
    }

    pub fn new_2d(x: (f64, f64), y: (f64, f64), n: [usize; 2]) -> Result<Self> {
        Self::build(2, [x.0, y.0], [x.1, y.1], n)
    }

    /// `(0, 1)` with `n` interior nodes.
    pub fn unit_interval(n: usize) -> Result<Self> {
        Self::new_1d(0.0, 1.0, n)
    }

    fn build(dim: usize, lo: [f64; 2], hi: [f64; 2], n: [usize; 2]) -> Result<Self> {
        let mut h = [1.0; 2];
        for ax in 0..dim {
            if n[ax] < 3 {
                return invalid(format!("grid needs n >= 3 per axis, got {}", n[ax]));
            }
            if !(lo[ax].is_finite() && hi[ax].is_finite()) || hi[ax] <= lo[ax] {
                return invalid(format!("empty or non-finite extent [{}, {}]", lo[ax], hi[ax]));
            }
            h[ax] = (hi[ax] - lo[ax]) / (n[ax] + 1) as f64;
        }
        Ok(Self { dim, lo, hi, n, h })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self, axis: usize) -> usize {
        if axis < self.dim {
            self.n[axis]
        } else {
            1
        }
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.lo[axis]
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.hi[axis]
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    /// Total number of interior nodes.
    pub fn len(&self) -> usize {
        self.n(0) * self.n(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of one node, `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.h[a]).product()
    }

    /// Measure of the box.
    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|a| self.length(a)).product()
    }

    /// Smallest spacing over the axes.
    pub fn h_min(&self) -> f64 {
        (0..self.dim).map(|a| self.h[a]).fold(f64::INFINITY, f64::min)
    }

    /// Coordinate of the `i`-th (0-based) interior node along `axis`.
    pub fn node(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis] + (i + 1) as f64 * self.h[axis]
    }

    /// Linear index to `(ix, iy)`; axis 0 runs fastest.
    pub fn split(&self, idx: usize) -> [usize; 2] {
        [idx % self.n[0], idx / self.n[0]]
    }

    pub fn join(&self, ix: usize, iy: usize) -> usize {
        ix + self.n[0] * iy
    }

    /// Physical coordinates of a node; the unused axis is 0 in 1D.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let [ix, iy] = self.split(idx);
        let y = if self.dim == 2 { self.node(1, iy) } else { 0.0 };
        [self.node(0, ix), y]
    }

    /// Smallest eigenvalue of the standard Dirichlet finite-difference Laplacian.
    pub fn first_laplacian_eigenvalue(&self) -> f64 {
        (0..self.dim)
            .map(|a| {
                let h = self.h[a];
                2.0 / (h * h) * (1.0 - (std::f64::consts::PI * h / self.length(a)).cos())
            })
            .sum()
    }

    /// Same mesh refined to `n` interior nodes per axis.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        let mut nn = self.n;
        for v in nn.iter_mut().take(self.dim) {
            *v = n;
        }
        Self::build(self.dim, self.lo, self.hi, nn)
    }
}

/// Complex grid function on the interior nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Samples `f` at every interior node.
    pub fn from_fn<F: Fn([f64; 2]) -> Complex64>(grid: Grid, f: F) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        Self { grid, values }
    }

    pub fn from_real_fn<F: Fn([f64; 2]) -> f64>(grid: Grid, f: F) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at a possibly exterior multi-index; anything outside is exactly 0.
    pub fn at(&self, ix: isize, iy: isize) -> Complex64 {
        let nx = self.grid.n(0) as isize;
        let ny = self.grid.n(1) as isize;
        if ix < 0 || iy < 0 || ix >= nx || iy >= ny {
            return Complex64::new(0.0, 0.0);
        }
        self.values[(ix + nx * iy) as usize]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest imaginary part relative to the largest modulus (0 for the zero field).
    pub fn imag_residue(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max) / scale
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: Complex64, other: &Field) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        Self { grid: self.grid, values }
    }

    /// Discrete `∫ conj(self) · other`.
    pub fn inner(&self, other: &Field) -> Complex64 {
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        s * self.grid.cell_volume()
    }

    /// `(Σ |u_i|^s h^dim)^(1/s)`.
    pub fn lp_norm(&self, s: f64) -> Result<f64> {
        if !(s >= 1.0) || !s.is_finite() {
            return invalid(format!("Lebesgue exponent must satisfy s >= 1, got {s}"));
        }
        if !self.is_finite() {
            return Err(Error::NonFinite("field passed to lp_norm".into()));
        }
        Ok(lp_norm_unchecked(&self.values, s, self.grid.cell_volume()))
    }

    /// `Σ_edges |Δu / h|^2 h^dim`, including the edges to the zero boundary.
    pub fn gradient_sq_norm(&self) -> f64 {
        let g = &self.grid;
        let vol = g.cell_volume();
        let (nx, ny) = (g.n(0) as isize, g.n(1) as isize);
        let mut total = 0.0;
        for axis in 0..g.dim() {
            let h = g.h(axis);
            let mut acc = 0.0;
            if axis == 0 {
                for iy in 0..ny {
                    for ix in -1..nx {
                        acc += (self.at(ix + 1, iy) - self.at(ix, iy)).norm_sqr();
                    }
                }
            } else {
                for iy in -1..ny {
                    for ix in 0..nx {
                        acc += (self.at(ix, iy + 1) - self.at(ix, iy)).norm_sqr();
                    }
                }
            }
            total += acc / (h * h) * vol;
        }
        total
    }
}

pub(crate) fn lp_norm_unchecked(values: &[Complex64], s: f64, vol: f64) -> f64 {
    let mut acc = 0.0;
    if s == 2.0 {
        for v in values {
            acc += v.norm_sqr();
        }
        return (acc * vol).sqrt();
    }
    for v in values {
        let a = v.norm();
        if a > 0.0 {
            acc += a.powf(s);
        }
    }
    (acc * vol).powf(1.0 / s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(n: usize) -> Field {
        let g = Grid::unit_interval(n).unwrap();
        Field::from_real_fn(g, |x| (PI * x[0]).sin())
    }

    #[test]
    fn grid_rejects_tiny_or_empty() {
        assert!(Grid::unit_interval(2).is_err());
        assert!(Grid::new_1d(1.0, 1.0, 10).is_err());
        let g = Grid::unit_interval(99).unwrap();
        assert!((g.h(0) - 0.01).abs() < 1e-15);
        assert!((g.node(0, 0) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn constant_field_norm() {
        let g = Grid::unit_interval(99).unwrap();
        let f = Field::from_real(g, &vec![1.0; 99]).unwrap();
        let v = f.lp_norm(2.0).unwrap();
        assert!((v - 0.99f64.sqrt()).abs() < 1e-14);
        assert_eq!(Field::zeros(g).lp_norm(3.0).unwrap(), 0.0);
    }

    #[test]
    fn norm_rejects_bad_input() {
        let f = sine(9);
        assert!(f.lp_norm(0.5).is_err());
        let bad = f.map(|_| Complex64::new(f64::NAN, 0.0));
        assert!(bad.lp_norm(2.0).is_err());
    }

    #[test]
    fn sine_norm_and_gradient_converge() {
        let f = sine(999);
        assert!((f.lp_norm(2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-5);
        let g = f.gradient_sq_norm();
        assert!((g - PI * PI / 2.0).abs() < 1e-4, "{g}");
    }

    #[test]
    fn constant_gradient_only_boundary() {
        let g = Grid::unit_interval(9).unwrap();
        let f = Field::from_real(g, &vec![2.0; 9]).unwrap();
        let h = g.h(0);
        let expect = 2.0 * (2.0 / h) * (2.0 / h) * h;
        assert!((f.gradient_sq_norm() - expect).abs() < 1e-9);
    }

    #[test]
    fn gradient_2d_separable() {
        let g = Grid::new_2d((0.0, 1.0), (0.0, 1.0), [63, 63]).unwrap();
        let f = Field::from_real_fn(g, |x| (PI * x[0]).sin() * (PI * x[1]).sin());
        // ∫|∇u|² = 2 · π²/4
        assert!((f.gradient_sq_norm() - PI * PI / 2.0).abs() < 5e-3);
    }

    #[test]
    fn exterior_is_zero() {
        let f = sine(5);
        assert_eq!(f.at(-1, 0), Complex64::new(0.0, 0.0));
        assert_eq!(f.at(5, 0), Complex64::new(0.0, 0.0));
        assert_eq!(f.at(0, 1), Complex64::new(0.0, 0.0));
        assert_ne!(f.at(2, 0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn discrete_poincare_on_eigenfunction() {
        let f = sine(49);
        let lam = f.grid().first_laplacian_eigenvalue();
        let lhs = f.lp_norm(2.0).unwrap().powi(2);
        let rhs = f.gradient_sq_norm() / lam;
        assert!((lhs - rhs).abs() < 1e-12 * lhs.max(1.0));
    }
}
