use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmovcError {
    #[error(transparent)]
    Tensor(#[from] ndgrad::NdError),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("insufficient input: {0}")]
    InsufficientInput(String),

    #[error("empty track: no valid frames")]
    EmptyTrack,

    #[error("degenerate contour: {0}")]
    DegenerateContour(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("non-finite loss at step {step}: {breakdown}")]
    NonFiniteLoss { step: u64, breakdown: String },

    #[error("checkpoint write failed at {path}: {source}")]
    Checkpoint {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("wav {path}: {message}")]
    Wav { path: PathBuf, message: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = EmovcError> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> EmovcError {
    let path = path.into();
    move |source| EmovcError::Io { path, source }
}
