use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("comparison matrix is not antisymmetric at ({i}, {j}): {a} vs {b}")]
    NotAntisymmetric { i: usize, j: usize, a: f64, b: f64 },

    #[error("cardinal comparisons given where ordinal ones are required; apply sign conversion first (ComparisonGraph::signed)")]
    CardinalInput,

    #[error("ordinal comparisons given where cardinal ones are required")]
    OrdinalInput,

    #[error("item `{0}` has no observed comparisons")]
    IsolatedItem(String),

    #[error("comparison graph is disconnected ({components} components); covariate-based rankers can handle this")]
    Disconnected { components: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite after jitter escalation (last jitter {jitter:e})")]
    NotPositiveDefinite { jitter: f64 },

    #[error("power iteration did not converge after {iterations} iterations (last change {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: u64, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse error classes, used by front ends to choose an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter { .. } => ErrorClass::Usage,
            Error::NotSymmetric(_)
            | Error::NotPositiveDefinite { .. }
            | Error::NoConvergence { .. }
            | Error::Degenerate(_) => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }

    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
