use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("context chain is not ergodic: {0}")]
    Ergodicity(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("fragmentation map is not injective: {0}")]
    Injectivity(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("symbol not in alphabet: {0}")]
    Alphabet(String),

    #[error("insufficient data: {0}")]
    Data(String),

    #[error("predictor is not strictly positive: {0}")]
    Positivity(String),

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
