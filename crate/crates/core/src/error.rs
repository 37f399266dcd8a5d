use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("mesh mismatch: {left} interior nodes vs {right}")]
    MeshMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("hypothesis violation ({hypothesis}) at r = {sample}: {detail}")]
    HypothesisViolation {
        hypothesis: &'static str,
        sample: f64,
        detail: String,
    },

    #[error("incompatible steps: {0}")]
    IncompatibleSteps(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
