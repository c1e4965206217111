use thiserror::Error;

/// Errors raised by the solvers in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid too small: {nx}x{ny} (need at least 4x4)")]
    GridTooSmall { nx: usize, ny: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    LinearSolve { iterations: usize, residual: f64 },

    #[error("fixed-point iteration diverged at iteration {iteration} (norm {norm:.3e})")]
    Divergence { iteration: usize, norm: f64 },

    #[error("iteration limit {max_iter} reached (last update {last_update:.3e})")]
    MaxIter { max_iter: usize, last_update: f64 },

    #[error("line search stagnated at iteration {iteration} (gradient norm {gradient_norm:.3e})")]
    LineSearchStagnation { iteration: usize, gradient_norm: f64 },

    #[error("Newton iteration failed at lambda={lambda}: {reason}")]
    NewtonFailure { lambda: f64, reason: String },

    #[error("trajectory unsuitable: {0}")]
    Trajectory(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable variant name for machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::GridTooSmall { .. } => "GridTooSmall",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::GridMismatch(_) => "GridMismatch",
            Error::NonFinite { .. } => "NonFinite",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::LinearSolve { .. } => "LinearSolve",
            Error::Divergence { .. } => "Divergence",
            Error::MaxIter { .. } => "MaxIter",
            Error::LineSearchStagnation { .. } => "LineSearchStagnation",
            Error::NewtonFailure { .. } => "NewtonFailure",
            Error::Trajectory(_) => "Trajectory",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }

    /// Errors caused by the caller's input rather than by a solver.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::GridTooSmall { .. }
                | Error::InvalidGrid(_)
                | Error::GridMismatch(_)
                | Error::InvalidParameter(_)
                | Error::Parse(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
