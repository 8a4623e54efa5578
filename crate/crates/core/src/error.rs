use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("B-form is negative: <Bv, v> = {0:e}")]
    NegativeForm(f64),

    #[error("invalid set-valued field: {0}")]
    InvalidField(String),

    #[error("polytope projection did not converge within {iterations} iterations")]
    ProjectionFailure { iterations: usize },

    #[error("support direction is zero")]
    ZeroDirection,

    #[error("selection rule needs a previous selection")]
    MissingPrevious,

    #[error(
        "nonlinear solve failed{}: residual {residual:e} after {iterations} iterations",
        step.map(|s| format!(" at step {s}")).unwrap_or_default()
    )]
    NonlinearSolve {
        step: Option<usize>,
        residual: f64,
        iterations: usize,
    },

    #[error("invalid a priori constants: {0}")]
    InvalidConstants(String),
}

pub type Result<T> = std::result::Result<T, Error>;
