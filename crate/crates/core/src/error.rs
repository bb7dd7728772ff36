use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate locations at indices {i} and {j}")]
    DuplicateSite { i: usize, j: usize },

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("covariance matrix is not positive definite")]
    NotPd,

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse {
        row: usize,
        col: String,
        msg: String,
    },

    #[error("split must define nonempty training and validation sets")]
    Split,

    #[error("invalid sampling design: {0}")]
    Design(String),

    #[error("no accepted moves for block '{0}' over the full burn-in")]
    Adaptation(String),

    #[error("importance weights degenerate (ess = {ess})")]
    DegenerateWeights { ess: f64 },

    #[error("problem size exceeds configured cap: {0}")]
    Capacity(String),

    #[error("index {index} out of range for length {len}")]
    Index { index: usize, len: usize },

    #[error("incompatible result schemas: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
