//! Generalized harmonic maps between degenerate semi-Riemannian charts.
//!
//! The crate is organised bottom-up:
//!
//! - [`exprjet`]: expression parsing and order-2 forward jets;
//! - [`linalg`]: possibly degenerate inner-product spaces (signature,
//!   radical, orthogonal complements, quotient by the radical);
//! - [`manifold`]: charts in radical coordinates, stationarity, the
//!   quotient metric and its Koszul connection;
//! - [`morphism`]: radical-preserving maps, horizontal weak conformality,
//!   second fundamental form and tension field;
//! - [`fixtures`]: worked examples with recorded expectations;
//! - [`cli`]: JSON manifests and reports behind the `harmorph` binary.

pub mod cli;
pub mod exprjet;
pub mod fixtures;
pub mod linalg;
pub mod manifold;
pub mod morphism;
pub mod scalar;

pub use scalar::{Rational, Scalar};

/// Default absolute tolerance for residual and zero tests.
pub const DEFAULT_TOL: f64 = 1e-9;
