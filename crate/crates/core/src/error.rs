use num_complex::Complex64;
use thiserror::Error;

use crate::geometry::SingularPoint;

/// A single schema problem, located by a JSON pointer.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let path = if self.path.is_empty() { "/" } else { &self.path };
        write!(f, "{path}: {}", self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("operator is not bisectorial: {reason} (sample {sample}, constant {constant:e})")]
    NotBisectorial {
        reason: String,
        sample: Complex64,
        constant: f64,
    },

    #[error("resolvent is singular at z = {0}")]
    SingularResolvent(Complex64),

    #[error("quadrature did not reach tolerance {tol:e} within depth {max_depth} (estimate {estimate:e})")]
    QuadratureDiverged {
        tol: f64,
        max_depth: usize,
        estimate: f64,
    },

    #[error("regularizer is not injective: {0}")]
    RegularizerNotInjective(String),

    #[error("no regularizer available: {0}")]
    NoRegularizer(String),

    #[error("regularizers disagree: difference {difference:e} exceeds {tolerance:e}")]
    RegularizerMismatch { difference: f64, tolerance: f64 },

    #[error("function is not in the primary class E(A): {0}")]
    NotInPrimaryClass(String),

    #[error("limit at {0} is not declared")]
    UndeclaredLimit(SingularPoint),

    #[error("selection is not open and closed in the spectrum: {0}")]
    NotClopen(String),

    #[error("numerical rank is indeterminate: singular values {below:e} and {above:e} straddle threshold {threshold:e}")]
    RankIndeterminate {
        below: f64,
        above: f64,
        threshold: f64,
    },

    #[error("operator has empty resolvent set")]
    EmptyResolvent,

    #[error("value {0} is attained at a singular point; factorization does not apply")]
    ZeroAtSingularPoint(Complex64),

    #[error("linear system for the E(A) decomposition is singular")]
    SingularSystem,

    #[error("expression error: {0}")]
    Expression(String),

    #[error("invalid input: {}", format_diagnostics(.0))]
    Schema(Vec<Diagnostic>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    /// Errors caused by the caller's input rather than by a failed computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Schema(_)
                | Error::Expression(_)
                | Error::InvalidArgument(_)
                | Error::Json(_)
                | Error::UndeclaredLimit(_)
                | Error::NotBisectorial { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
