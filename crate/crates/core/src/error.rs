use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("grid of {requested} points exceeds the cap of {cap}")]
    GridTooLarge { requested: u64, cap: u64 },

    #[error("capture mismatch: {0}")]
    CaptureMismatch(String),

    #[error("transmit buffer too short: {0}")]
    BufferTooShort(String),

    #[error("grids reference different candidate grids")]
    GridMismatch,

    #[error("working set of {needed} bytes exceeds budget of {budget} bytes (limited by {term})")]
    OverBudget {
        needed: u64,
        budget: u64,
        term: &'static str,
    },

    #[error("backend {backend}: {message}")]
    Backend { backend: String, message: String },

    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
