use std::path::PathBuf;

/// Errors raised across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("view {view}: slice is not symmetric (entry ({row}, {col}) differs from its transpose)")]
    NonSymmetricSlice { view: usize, row: usize, col: usize },

    #[error("view {view}: invalid weight {weight} at ({row}, {col})")]
    InvalidWeight {
        view: usize,
        row: usize,
        col: usize,
        weight: f64,
    },

    #[error("view {view}: stationary distribution did not converge after {steps} steps")]
    NoConvergence { view: usize, steps: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("solver diverged: {0}")]
    Diverged(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
