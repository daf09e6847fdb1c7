use thiserror::Error;

/// Errors raised by the simplex numerics, the conjugate solver and the game driver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaaError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("gradient is singular at the simplex boundary (coordinate {index} = {value:e})")]
    BoundaryGradient { index: usize, value: f64 },

    #[error("solver did not converge: residual {residual:e} after {iterations} iterations")]
    Solver {
        best: Vec<f64>,
        residual: f64,
        iterations: usize,
    },

    #[error("infinite loss: prediction assigns zero probability to outcome {outcome}")]
    InfiniteLoss { outcome: usize },

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("unbounded penalty: entropy is infinite at the vertex for expert {expert}")]
    UnboundedPenalty { expert: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no feasible eta found in ({lo}, {hi})")]
    OutOfRange { lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, GaaError>;

pub(crate) fn invalid(msg: impl Into<String>) -> GaaError {
    GaaError::InvalidInput(msg.into())
}
