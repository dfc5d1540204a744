use std::path::PathBuf;

use thiserror::Error;

use crate::judge::JudgeError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("model: {0}")]
    Model(String),

    #[error("sequence of {len} tokens exceeds context length {max}")]
    TooLong { len: usize, max: usize },

    #[error("model is frozen; gradients are not available")]
    Frozen,

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("non-finite gradient in parameter `{param}`")]
    NonFinite { param: String },

    #[error("loss: {0}")]
    Loss(String),

    #[error("metric: {0}")]
    Metric(String),

    #[error(transparent)]
    Judge(#[from] JudgeError),

    #[error("config: {0}")]
    Config(String),

    #[error("missing prerequisite: {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
