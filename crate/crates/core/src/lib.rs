//! Mixed classical/Caputo time-fractional evolution equations on bounded boxes.
//!
//! The crate simulates `(λ1 ∂t^α + λ2 ∂t) u + N[u] = 0` with `u = 0` outside the
//! domain, for a menu of local, nonlocal, nonlinear and complex operators `N`,
//! and provides the tools to check the decay estimates that go with it:
//! structural inequalities, scalar barriers and comparison, and decay fits.

pub mod barriers;
pub mod decay;
pub mod error;
pub mod grid;
pub mod inequality;
pub mod operators;
pub mod par;
pub mod quadrature;
pub mod time;

pub use error::{Error, Result};
pub use grid::{Field, Grid};
pub use num_complex::Complex64;
pub use operators::DiffusionOperator;
