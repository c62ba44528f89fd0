use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error on line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("input contains no valid records")]
    EmptyInput,

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("series shorter than required: need {needed}, have {available}")]
    TooShort { needed: usize, available: usize },

    #[error("insufficient statistics: {found} clusters, need at least {required}")]
    InsufficientClusters { found: usize, required: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("covariance matrix is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },

    #[error("covariance matrix is not positive semi-definite")]
    NotPositiveSemiDefinite,

    #[error("portfolio variance is zero")]
    ZeroVariance,

    #[error("no asset has a positive expected return; tangency portfolio undefined")]
    NoTangency,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
