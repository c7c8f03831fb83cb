//! The diffusion operators `N`, behind one enum and one discrete dispatcher.
//!
//! Sign convention: every operator is "positive", e.g. the Laplacian entry
//! stands for `-d Δu`, so the evolution reads `(λ1 ∂t^α + λ2 ∂t) u = -N[u]`.

mod curvature;
pub mod kernel;
mod local;
mod nonlocal;

pub use curvature::CurvatureProfile;
pub use kernel::{fractional_laplacian_constant, riesz_constant, AxisTable, PairTable, RieszTable};

use crate::error::{invalid, Error, Result};
use crate::grid::{Field, Grid};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

/// Magnetic potential `A(x)`: a constant vector or `A0 + M x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VectorPotential {
    Constant([f64; 2]),
    Linear { a0: [f64; 2], m: [[f64; 2]; 2] },
}

impl VectorPotential {
    pub fn zero() -> Self {
        Self::Constant([0.0, 0.0])
    }

    pub fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        match *self {
            Self::Constant(a) => a,
            Self::Linear { a0, m } => [
                a0[0] + m[0][0] * x[0] + m[0][1] * x[1],
                a0[1] + m[1][0] * x[0] + m[1][1] * x[1],
            ],
        }
    }
}

/// One term `β (-Δ)^σ_p` of a superposition of fractional p-Laplacians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PTerm {
    pub beta: f64,
    pub sigma: f64,
    pub p: f64,
}

/// Constant in front of the fractional Laplacian kernel.
///
/// `Bare` uses `|x - y|^(-n-2σ)` as is; `Standard` multiplies it by
/// [`fractional_laplacian_constant`]. The Riesz potential of the porous
/// medium operator always carries its standard constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelNormalization {
    #[default]
    Bare,
    Standard,
}

impl FromStr for KernelNormalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bare" => Ok(Self::Bare),
            "standard" => Ok(Self::Standard),
            other => invalid(format!("unknown kernel normalization '{other}' (bare|standard)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DiffusionOperator {
    Laplacian { d: f64 },
    FractionalLaplacian { sigma: f64, d: f64 },
    /// `-Δ_p (u^m)`.
    PLaplacianPower { p: f64, m: f64 },
    FractionalPLaplacian { sigma: f64, p: f64 },
    SumFractionalPLaplacians { terms: Vec<PTerm> },
    /// `Σ β_j (-∂²_{x_j})^{σ_j}`, one `(β_j, σ_j)` per axis.
    AnisotropicFractional { axes: Vec<(f64, f64)> },
    /// `(-Δ)^σ (u^m)`.
    PorousMediumI { sigma: f64, m: f64 },
    /// `-∇·(u ∇ K⋆u)` with the Riesz kernel of order `2σ`.
    PorousMediumII { sigma: f64 },
    KirchhoffClassical { m0: f64, b: f64 },
    KirchhoffFractional { sigma: f64, m0: f64, b: f64 },
    Magnetic { a: VectorPotential },
    FractionalMagnetic { sigma: f64, a: VectorPotential },
    MeanCurvature,
    FractionalMeanCurvature { sigma: f64 },
}

/// How the time stepper may treat an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linearity {
    /// `N[u] = A u` for a fixed Hermitian matrix `A`.
    Linear,
    /// `N[u] = m(u) A u` with a scalar prefactor `m`.
    ScaledLinear,
    Nonlinear,
}

impl DiffusionOperator {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Laplacian { .. } => "laplacian",
            Self::FractionalLaplacian { .. } => "fractional_laplacian",
            Self::PLaplacianPower { .. } => "p_laplacian",
            Self::FractionalPLaplacian { .. } => "fractional_p_laplacian",
            Self::SumFractionalPLaplacians { .. } => "sum_fractional_p_laplacians",
            Self::AnisotropicFractional { .. } => "anisotropic_fractional",
            Self::PorousMediumI { .. } => "porous_medium_1",
            Self::PorousMediumII { .. } => "porous_medium_2",
            Self::KirchhoffClassical { .. } => "kirchhoff",
            Self::KirchhoffFractional { .. } => "fractional_kirchhoff",
            Self::Magnetic { .. } => "magnetic",
            Self::FractionalMagnetic { .. } => "fractional_magnetic",
            Self::MeanCurvature => "mean_curvature",
            Self::FractionalMeanCurvature { .. } => "fractional_mean_curvature",
        }
    }

    /// Checks parameter ranges and compatibility with the grid dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        fn sig(s: f64) -> Result<()> {
            if s > 0.0 && s < 1.0 {
                Ok(())
            } else {
                invalid(format!("sigma must lie in (0,1), got {s}"))
            }
        }
        fn pos(name: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                invalid(format!("{name} must be positive, got {v}"))
            }
        }
        fn pexp(p: f64) -> Result<()> {
            if p > 1.0 && p.is_finite() {
                Ok(())
            } else {
                invalid(format!("p must exceed 1, got {p}"))
            }
        }
        if dim != 1 && dim != 2 {
            return Err(Error::Dimension(format!("only 1D and 2D grids are supported, got {dim}")));
        }
        match self {
            Self::Laplacian { d } => pos("d", *d),
            Self::FractionalLaplacian { sigma, d } => sig(*sigma).and(pos("d", *d)),
            Self::PLaplacianPower { p, m } => pexp(*p).and(pos("m", *m)),
            Self::FractionalPLaplacian { sigma, p } => sig(*sigma).and(pexp(*p)),
            Self::SumFractionalPLaplacians { terms } => {
                if terms.is_empty() {
                    return invalid("superposition needs at least one term");
                }
                for t in terms {
                    pos("beta", t.beta)?;
                    sig(t.sigma)?;
                    pexp(t.p)?;
                }
                Ok(())
            }
            Self::AnisotropicFractional { axes } => {
                if axes.len() != dim {
                    return Err(Error::Dimension(format!(
                        "anisotropic operator needs one (beta, sigma) per axis: {} given, dim {dim}",
                        axes.len()
                    )));
                }
                for &(b, s) in axes {
                    pos("beta", b)?;
                    sig(s)?;
                }
                Ok(())
            }
            Self::PorousMediumI { sigma, m } => sig(*sigma).and(pos("m", *m)),
            Self::PorousMediumII { sigma } => {
                sig(*sigma)?;
                if (dim as f64) <= 2.0 * sigma {
                    return invalid(format!(
                        "porous medium II needs dim > 2 sigma (dim {dim}, sigma {sigma}); in 1D use sigma < 1/2"
                    ));
                }
                Ok(())
            }
            Self::KirchhoffClassical { m0, b } => kirchhoff_coeffs(*m0, *b),
            Self::KirchhoffFractional { sigma, m0, b } => sig(*sigma).and(kirchhoff_coeffs(*m0, *b)),
            Self::Magnetic { a } => potential_ok(a),
            Self::FractionalMagnetic { sigma, a } => sig(*sigma).and(potential_ok(a)),
            Self::MeanCurvature => Ok(()),
            Self::FractionalMeanCurvature { sigma } => sig(*sigma),
        }
    }

    pub fn is_nonlocal(&self) -> bool {
        !matches!(
            self,
            Self::Laplacian { .. }
                | Self::PLaplacianPower { .. }
                | Self::KirchhoffClassical { .. }
                | Self::Magnetic { .. }
                | Self::MeanCurvature
        )
    }

    /// True for operators that map real fields to real fields.
    pub fn is_real(&self) -> bool {
        !matches!(self, Self::Magnetic { .. } | Self::FractionalMagnetic { .. })
    }

    pub fn is_degenerate_kirchhoff(&self) -> bool {
        match *self {
            Self::KirchhoffClassical { m0, .. } | Self::KirchhoffFractional { m0, .. } => m0 == 0.0,
            _ => false,
        }
    }

    pub fn linearity(&self) -> Linearity {
        match self {
            Self::Laplacian { .. }
            | Self::FractionalLaplacian { .. }
            | Self::AnisotropicFractional { .. }
            | Self::Magnetic { .. }
            | Self::FractionalMagnetic { .. } => Linearity::Linear,
            Self::PLaplacianPower { p, m } if *p == 2.0 && *m == 1.0 => Linearity::Linear,
            Self::PorousMediumI { m, .. } if *m == 1.0 => Linearity::Linear,
            Self::KirchhoffClassical { .. } | Self::KirchhoffFractional { .. } => Linearity::ScaledLinear,
            _ => Linearity::Nonlinear,
        }
    }

    /// Differential order used in the explicit stability bound `dt <= c h^order`.
    pub fn order(&self) -> f64 {
        match self {
            Self::FractionalLaplacian { sigma, .. }
            | Self::PorousMediumI { sigma, .. }
            | Self::KirchhoffFractional { sigma, .. }
            | Self::FractionalMagnetic { sigma, .. } => 2.0 * sigma,
            Self::FractionalPLaplacian { sigma, p } => sigma * p,
            Self::SumFractionalPLaplacians { terms } => {
                terms.iter().map(|t| t.sigma * t.p).fold(0.0, f64::max)
            }
            Self::AnisotropicFractional { axes } => axes.iter().map(|a| 2.0 * a.1).fold(0.0, f64::max),
            Self::FractionalMeanCurvature { sigma } => 1.0 + sigma,
            _ => 2.0,
        }
    }

    /// Exponent `γ` of the structural inequality for this operator, or `None`
    /// when the hypotheses of the corresponding theorem fail (degenerate
    /// Kirchhoff outside its dimension/exponent range).
    pub fn structural_gamma(&self, dim: usize, s: f64) -> Option<f64> {
        let n = dim as f64;
        match self {
            Self::PLaplacianPower { p, m } => Some(m * (p - 1.0)),
            Self::FractionalPLaplacian { p, .. } => Some(p - 1.0),
            Self::SumFractionalPLaplacians { terms } => {
                Some(terms.iter().map(|t| t.p).fold(f64::MIN, f64::max) - 1.0)
            }
            Self::PorousMediumI { m, .. } => Some(*m),
            Self::PorousMediumII { .. } => {
                if s > 1.0 {
                    Some(2.0)
                } else {
                    None
                }
            }
            Self::KirchhoffClassical { m0, .. } if *m0 == 0.0 => {
                if n <= 4.0 || s <= 2.0 * n / (n - 4.0) {
                    Some(3.0)
                } else {
                    None
                }
            }
            Self::KirchhoffFractional { sigma, m0, .. } if *m0 == 0.0 => {
                if n <= 4.0 * sigma || s <= 2.0 * n / (n - 4.0 * sigma) {
                    Some(3.0)
                } else {
                    None
                }
            }
            _ => Some(1.0),
        }
    }
}

fn kirchhoff_coeffs(m0: f64, b: f64) -> Result<()> {
    if !(m0 >= 0.0 && b >= 0.0) || !(m0.is_finite() && b.is_finite()) {
        return invalid(format!("Kirchhoff coefficients must be nonnegative, got m0={m0}, b={b}"));
    }
    if m0 == 0.0 && b == 0.0 {
        return invalid("Kirchhoff coefficients m0 and b cannot both vanish");
    }
    Ok(())
}

fn potential_ok(a: &VectorPotential) -> Result<()> {
    let finite = match a {
        VectorPotential::Constant(v) => v.iter().all(|x| x.is_finite()),
        VectorPotential::Linear { a0, m } => {
            a0.iter().all(|x| x.is_finite()) && m.iter().flatten().all(|x| x.is_finite())
        }
    };
    if finite {
        Ok(())
    } else {
        invalid("magnetic potential has non-finite entries")
    }
}

impl fmt::Display for DiffusionOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Laplacian { d } => write!(f, "laplacian(d={d})"),
            Self::FractionalLaplacian { sigma, d } => write!(f, "fractional_laplacian(sigma={sigma}, d={d})"),
            Self::PLaplacianPower { p, m } => write!(f, "p_laplacian(p={p}, m={m})"),
            Self::FractionalPLaplacian { sigma, p } => write!(f, "fractional_p_laplacian(sigma={sigma}, p={p})"),
            Self::SumFractionalPLaplacians { terms } => {
                write!(f, "sum_fractional_p_laplacians(")?;
                for (k, t) in terms.iter().enumerate() {
                    if k > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{}:{}:{}", t.beta, t.sigma, t.p)?;
                }
                write!(f, ")")
            }
            Self::AnisotropicFractional { axes } => {
                write!(f, "anisotropic_fractional(")?;
                for (k, a) in axes.iter().enumerate() {
                    if k > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{}:{}", a.0, a.1)?;
                }
                write!(f, ")")
            }
            Self::PorousMediumI { sigma, m } => write!(f, "porous_medium_1(sigma={sigma}, m={m})"),
            Self::PorousMediumII { sigma } => write!(f, "porous_medium_2(sigma={sigma})"),
            Self::KirchhoffClassical { m0, b } => write!(f, "kirchhoff(m0={m0}, b={b})"),
            Self::KirchhoffFractional { sigma, m0, b } => {
                write!(f, "fractional_kirchhoff(sigma={sigma}, m0={m0}, b={b})")
            }
            Self::Magnetic { a } => write!(f, "magnetic({a:?})"),
            Self::FractionalMagnetic { sigma, a } => write!(f, "fractional_magnetic(sigma={sigma}, {a:?})"),
            Self::MeanCurvature => write!(f, "mean_curvature"),
            Self::FractionalMeanCurvature { sigma } => write!(f, "fractional_mean_curvature(sigma={sigma})"),
        }
    }
}

#[derive(Debug, Clone)]
enum Imp {
    Laplacian { d: f64 },
    Pair { table: Arc<PairTable>, scale: f64, p: f64 },
    Sum(Vec<(Arc<PairTable>, f64, f64)>),
    Anisotropic(Vec<(AxisTable, f64)>),
    PorousI { table: Arc<PairTable>, scale: f64, m: f64 },
    PorousII { riesz: Arc<RieszTable> },
    KirchhoffClassical { m0: f64, b: f64 },
    KirchhoffFractional { table: Arc<PairTable>, scale: f64, m0: f64, b: f64 },
    Magnetic { a: VectorPotential },
    FracMagnetic { table: Arc<PairTable>, scale: f64, a: VectorPotential },
    PLaplacian { p: f64, m: f64 },
    MeanCurvature,
    FracMeanCurvature { table: Arc<PairTable>, profile: Arc<CurvatureProfile>, sigma: f64 },
}

/// An operator bound to a grid, with all kernel tables precomputed.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    op: DiffusionOperator,
    grid: Grid,
    norm: KernelNormalization,
    imp: Imp,
}

impl DiscreteOperator {
    pub fn new(op: &DiffusionOperator, grid: &Grid, norm: KernelNormalization) -> Result<Self> {
        op.validate(grid.dim())?;
        let dim = grid.dim();
        let c = |sigma: f64| match norm {
            KernelNormalization::Bare => 1.0,
            KernelNormalization::Standard => fractional_laplacian_constant(dim, sigma),
        };
        let imp = match op {
            DiffusionOperator::Laplacian { d } => Imp::Laplacian { d: *d },
            DiffusionOperator::FractionalLaplacian { sigma, d } => Imp::Pair {
                table: Arc::new(PairTable::fractional_laplacian(grid, *sigma)),
                scale: d * c(*sigma),
                p: 2.0,
            },
            DiffusionOperator::PLaplacianPower { p, m } => Imp::PLaplacian { p: *p, m: *m },
            DiffusionOperator::FractionalPLaplacian { sigma, p } => Imp::Pair {
                table: Arc::new(p_table(grid, *sigma, *p)),
                scale: 1.0,
                p: *p,
            },
            DiffusionOperator::SumFractionalPLaplacians { terms } => Imp::Sum(
                terms.iter().map(|t| (Arc::new(p_table(grid, t.sigma, t.p)), t.beta, t.p)).collect(),
            ),
            DiffusionOperator::AnisotropicFractional { axes } => Imp::Anisotropic(
                axes.iter()
                    .enumerate()
                    .map(|(ax, &(beta, sigma))| {
                        let scale = match norm {
                            KernelNormalization::Bare => 1.0,
                            KernelNormalization::Standard => fractional_laplacian_constant(1, sigma),
                        };
                        (AxisTable::new(grid, ax, sigma), beta * scale)
                    })
                    .collect(),
            ),
            DiffusionOperator::PorousMediumI { sigma, m } => Imp::PorousI {
                table: Arc::new(PairTable::fractional_laplacian(grid, *sigma)),
                scale: c(*sigma),
                m: *m,
            },
            DiffusionOperator::PorousMediumII { sigma } => {
                Imp::PorousII { riesz: Arc::new(RieszTable::new(grid, *sigma)) }
            }
            DiffusionOperator::KirchhoffClassical { m0, b } => Imp::KirchhoffClassical { m0: *m0, b: *b },
            DiffusionOperator::KirchhoffFractional { sigma, m0, b } => Imp::KirchhoffFractional {
                table: Arc::new(PairTable::fractional_laplacian(grid, *sigma)),
                scale: c(*sigma),
                m0: *m0,
                b: *b,
            },
            DiffusionOperator::Magnetic { a } => Imp::Magnetic { a: *a },
            DiffusionOperator::FractionalMagnetic { sigma, a } => Imp::FracMagnetic {
                table: Arc::new(PairTable::fractional_laplacian(grid, *sigma)),
                scale: c(*sigma),
                a: *a,
            },
            DiffusionOperator::MeanCurvature => Imp::MeanCurvature,
            DiffusionOperator::FractionalMeanCurvature { sigma } => Imp::FracMeanCurvature {
                // weights of the linearized kernel |z|^(-n-1-σ), applied as w d G(Δu/d)
                table: Arc::new(PairTable::fractional_laplacian(grid, 0.5 * (1.0 + sigma))),
                profile: Arc::new(CurvatureProfile::new(dim, *sigma)),
                sigma: *sigma,
            },
        };
        Ok(Self { op: op.clone(), grid: *grid, norm, imp })
    }

    pub fn op(&self) -> &DiffusionOperator {
        &self.op
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn normalization(&self) -> KernelNormalization {
        self.norm
    }

    /// `N[u]` at the interior nodes.
    pub fn apply(&self, u: &Field) -> Result<Field> {
        if u.grid() != &self.grid {
            return Err(Error::Dimension("field grid differs from operator grid".into()));
        }
        let out = match &self.imp {
            Imp::Laplacian { d } => local::neg_laplacian(u, *d),
            Imp::Pair { table, scale, p } => nonlocal::power_pairs(table, u.values(), *p, *scale),
            Imp::Sum(terms) => {
                let mut acc = vec![Complex64::new(0.0, 0.0); u.len()];
                for (table, beta, p) in terms {
                    let part = nonlocal::power_pairs(table, u.values(), *p, *beta);
                    for (a, b) in acc.iter_mut().zip(part) {
                        *a += b;
                    }
                }
                acc
            }
            Imp::Anisotropic(axes) => nonlocal::anisotropic(&self.grid, axes, u.values()),
            Imp::PorousI { table, scale, m } => {
                let w: Vec<Complex64> = u.values().iter().map(|&v| signed_power(v, *m)).collect();
                nonlocal::power_pairs(table, &w, 2.0, *scale)
            }
            Imp::PorousII { riesz } => local::porous_flux(&self.grid, riesz, u),
            Imp::KirchhoffClassical { m0, b } => {
                let pref = m0 + b * u.gradient_sq_norm();
                local::neg_laplacian(u, pref)
            }
            Imp::KirchhoffFractional { table, scale, m0, b } => {
                let lu = nonlocal::power_pairs(table, u.values(), 2.0, 1.0);
                let gag = 2.0 * real_inner(u.values(), &lu) * self.grid.cell_volume();
                let pref = 2.0 * (m0 + b * gag) * scale;
                lu.into_iter().map(|v| v * pref).collect()
            }
            Imp::Magnetic { a } => local::magnetic(u, a),
            Imp::FracMagnetic { table, scale, a } => nonlocal::magnetic_pairs(table, u.values(), a, *scale),
            Imp::PLaplacian { p, m } => local::p_laplacian(u, *p, *m),
            Imp::MeanCurvature => local::mean_curvature(u),
            Imp::FracMeanCurvature { table, profile, sigma } => {
                nonlocal::fractional_mean_curvature(table, profile, *sigma, u.values())
            }
        };
        let f = Field::new(self.grid, out)?;
        if !f.is_finite() {
            return Err(Error::NonFinite(format!("{} produced a non-finite value", self.op.name())));
        }
        Ok(f)
    }

    /// Scalar prefactor `m(u)` of a Kirchhoff operator, 1 for linear ones.
    pub fn prefactor(&self, u: &Field) -> f64 {
        match &self.imp {
            Imp::KirchhoffClassical { m0, b } => m0 + b * u.gradient_sq_norm(),
            Imp::KirchhoffFractional { table, m0, b, .. } => {
                let lu = nonlocal::power_pairs(table, u.values(), 2.0, 1.0);
                m0 + b * 2.0 * real_inner(u.values(), &lu) * self.grid.cell_volume()
            }
            _ => 1.0,
        }
    }

    /// The fixed linear operator `A` with `N[u] = prefactor(u) A u`, when there is one.
    pub fn linear_base(&self) -> Option<DiscreteOperator> {
        match (&self.imp, self.op.linearity()) {
            (_, Linearity::Nonlinear) => None,
            (Imp::KirchhoffClassical { .. }, _) => Some(Self {
                op: DiffusionOperator::Laplacian { d: 1.0 },
                grid: self.grid,
                norm: self.norm,
                imp: Imp::Laplacian { d: 1.0 },
            }),
            (Imp::KirchhoffFractional { table, scale, .. }, _) => Some(Self {
                op: self.op.clone(),
                grid: self.grid,
                norm: self.norm,
                imp: Imp::Pair { table: table.clone(), scale: 2.0 * scale, p: 2.0 },
            }),
            _ => Some(self.clone()),
        }
    }

    /// Sub-, main and super-diagonal of a 1D local linear operator.
    pub fn tridiagonal(&self) -> Option<[Vec<Complex64>; 3]> {
        if self.grid.dim() != 1 {
            return None;
        }
        let n = self.grid.len();
        let h = self.grid.h(0);
        let h2 = h * h;
        match &self.imp {
            Imp::Laplacian { d } => Some([
                vec![Complex64::new(-d / h2, 0.0); n],
                vec![Complex64::new(2.0 * d / h2, 0.0); n],
                vec![Complex64::new(-d / h2, 0.0); n],
            ]),
            Imp::PLaplacian { p, m } if *p == 2.0 && *m == 1.0 => {
                Self { imp: Imp::Laplacian { d: 1.0 }, ..self.clone() }.tridiagonal()
            }
            Imp::Magnetic { a } => {
                let mut lo = vec![Complex64::new(0.0, 0.0); n];
                let mut up = vec![Complex64::new(0.0, 0.0); n];
                for i in 0..n {
                    let x = self.grid.node(0, i);
                    let ar = a.eval([x + 0.5 * h, 0.0])[0];
                    let al = a.eval([x - 0.5 * h, 0.0])[0];
                    up[i] = -Complex64::from_polar(1.0, -h * ar) / h2;
                    lo[i] = -Complex64::from_polar(1.0, h * al) / h2;
                }
                Some([lo, vec![Complex64::new(2.0 / h2, 0.0); n], up])
            }
            _ => None,
        }
    }

    /// Dense matrix of a linear operator, assembled column by column.
    pub fn dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        if self.op.linearity() != Linearity::Linear && !matches!(self.imp, Imp::Pair { p, .. } if p == 2.0) {
            return invalid(format!("{} is not linear", self.op.name()));
        }
        let n = self.grid.len();
        let cols: Vec<Result<Vec<Complex64>>> = crate::par::map_range(n, |j| {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[j] = Complex64::new(1.0, 0.0);
            let f = Field::new(self.grid, e)?;
            Ok(self.apply(&f)?.into_values())
        });
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for (j, col) in cols.into_iter().enumerate() {
            let col = col?;
            for (i, v) in col.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    /// Riesz table of the porous medium II operator.
    pub(crate) fn riesz(&self) -> Option<&RieszTable> {
        match &self.imp {
            Imp::PorousII { riesz } => Some(riesz),
            _ => None,
        }
    }
}

fn p_table(grid: &Grid, sigma: f64, p: f64) -> PairTable {
    PairTable::new(grid, sigma * p, p, sigma * p, 1.0)
}

pub(crate) fn signed_power(v: Complex64, m: f64) -> Complex64 {
    let r = v.norm();
    if r == 0.0 || m == 1.0 {
        return v;
    }
    v * r.powf(m - 1.0)
}

pub(crate) fn real_inner(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Applies `op` to `field` with bare kernels.
pub fn apply(op: &DiffusionOperator, field: &Field) -> Result<Field> {
    DiscreteOperator::new(op, field.grid(), KernelNormalization::Bare)?.apply(field)
}

/// `K ⋆ u` with `K = c(n,σ) |x|^(-(n-2σ))` on the interior nodes.
pub fn riesz_convolution(field: &Field, sigma: f64) -> Result<Field> {
    let g = field.grid();
    if !(sigma > 0.0 && sigma < 1.0) {
        return invalid(format!("sigma must lie in (0,1), got {sigma}"));
    }
    if (g.dim() as f64) <= 2.0 * sigma {
        return invalid(format!("Riesz potential needs dim > 2 sigma (dim {}, sigma {sigma})", g.dim()));
    }
    let table = RieszTable::new(g, sigma);
    let re: Vec<f64> = field.values().iter().map(|v| v.re).collect();
    let im: Vec<f64> = field.values().iter().map(|v| v.im).collect();
    let pr = table.convolve(&re);
    let pi = if im.iter().any(|&v| v != 0.0) { table.convolve(&im) } else { vec![0.0; re.len()] };
    Field::new(*g, pr.into_iter().zip(pi).map(|(a, b)| Complex64::new(a, b)).collect())
}

/// Kirchhoff prefactor `m0 + b ‖∇u‖²` or `M0 + b ‖u‖_Z²`.
pub fn kirchhoff_prefactor(op: &DiffusionOperator, field: &Field) -> Result<f64> {
    match op {
        DiffusionOperator::KirchhoffClassical { m0, b } => Ok(m0 + b * field.gradient_sq_norm()),
        DiffusionOperator::KirchhoffFractional { sigma, m0, b } => {
            Ok(m0 + b * gagliardo_seminorm_sq(field, *sigma))
        }
        other => invalid(format!("{} has no Kirchhoff prefactor", other.name())),
    }
}

/// Discrete `∬ |u(x) - u(y)|² / |x - y|^(n+2σ)` over all of space with `u = 0` outside.
pub fn gagliardo_seminorm_sq(field: &Field, sigma: f64) -> f64 {
    let table = PairTable::fractional_laplacian(field.grid(), sigma);
    gagliardo_with(&table, field)
}

pub(crate) fn gagliardo_with(table: &PairTable, field: &Field) -> f64 {
    let u = field.values();
    let n = u.len();
    let vol = field.grid().cell_volume();
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            if j != i {
                row += table.weight(i, j) * (u[i] - u[j]).norm_sqr();
            }
        }
        acc += row + 2.0 * table.tail()[i] * u[i].norm_sqr();
    }
    acc * vol
}

#[cfg(test)]
mod tests;
