use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("mode {mode} out of range for order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("solver failure after {iterations} iterations: {reason}")]
    SolverFailure { iterations: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
