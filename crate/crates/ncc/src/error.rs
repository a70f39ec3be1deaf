//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid instance spec: {0}")]
    InvalidSpec(String),

    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),

    #[error("no dense region found after {retries} rectangle redraws (need {needed} points)")]
    NoDenseRegion { retries: usize, needed: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("parse error in {path}: {detail}")]
    Parse { path: String, detail: String },

    #[error("validation error in {path}: {detail}")]
    Validation { path: String, detail: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("size guard violated: {0}")]
    SizeGuard(String),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
