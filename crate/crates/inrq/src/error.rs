//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration, flags, or arguments.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Tensor or image shape mismatch.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A loss evaluation produced a non-finite value.
    #[error("non-finite loss")]
    NonFinite,

    /// Training aborted because the loss became non-finite.
    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize },

    /// A quantized weight was not found in its layer's level set.
    #[error("internal consistency: {0}")]
    Inconsistent(String),

    /// Malformed or corrupted artifact container.
    #[error("artifact decode failed at byte {offset}: {reason}")]
    Decode { offset: usize, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn decode(offset: usize, reason: impl Into<String>) -> Self {
        Error::Decode { offset, reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
