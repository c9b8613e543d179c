use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is not symmetric (entry ({row}, {col}))")]
    NotSymmetric { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("inconsistent dimensions: {0}")]
    InconsistentDimensions(String),

    #[error("non-finite entry at position {0}")]
    NonFinite(usize),

    #[error("sparsity {s} exceeds dimension {p}")]
    SparsityExceedsDim { s: usize, p: usize },

    #[error("nodewise noise level for column {column} is degenerate (tau^2 = {tau_sq:e})")]
    DegenerateNoise { column: usize, tau_sq: f64 },

    #[error("gradient direction is zero")]
    ZeroGradient,

    #[error("variance quadratic form is negative ({0:e})")]
    NegativeVariance(f64),

    #[error("confidence level {0} outside (0, 1)")]
    InvalidLevel(f64),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("failed to parse matrix: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn dims(what: impl Into<String>) -> Error {
    Error::DimensionMismatch(what.into())
}
