//! Regularized holomorphic functional calculus for bisectorial-like operators.
//!
//! Operators are either dense complex matrices or symbolic diagonal models
//! (atoms of eigenvalues plus convergent tails). On top of the calculus the
//! crate computes Fredholm profiles, the extended essential spectra and checks
//! of the spectral mapping theorem.

pub mod calculus;
pub mod config;
pub mod error;
pub mod expr;
pub mod ext;
pub mod fredholm;
pub mod function;
pub mod geometry;
pub mod linalg;
pub mod operator;
pub mod oracle;
pub mod quadrature;
pub mod scenario;
pub mod schema;
pub mod verify;

pub use error::{Diagnostic, Error, Result};
pub use ext::{Count, ExtComplex};
