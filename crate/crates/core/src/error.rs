use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("operator is not Hermitian (relative defect {0:.3e})")]
    NotHermitian(f64),
    #[error("non-stationary model: operator norm {0:.6} >= 1")]
    NonStationary(f64),
    #[error("no closed form available for {0}")]
    NoClosedForm(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("singular operator")]
    Singular,
    #[error("binary format: {0}")]
    Format(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
