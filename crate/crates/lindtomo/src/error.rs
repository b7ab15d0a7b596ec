use thiserror::Error;

/// Toolkit-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid POVM: {0}")]
    InvalidPovm(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("degenerate steady-state space (null dimension {0})")]
    DegenerateSteadyState(usize),
    #[error("optimizer failure: {0}")]
    Optimizer(String),
    #[error("empty or insufficient data: {0}")]
    InsufficientData(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
