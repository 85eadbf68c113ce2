use std::path::PathBuf;

/// Errors produced by the planning toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("invalid scene: field `{field}`: {reason}")]
    InvalidScene { field: String, reason: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("unknown object class `{0}`")]
    UnknownClass(String),

    #[error("unknown object id `{0}`")]
    UnknownObject(String),

    #[error("sampling failed after {attempts} attempts: {reason}")]
    SamplingFailed {
        attempts: usize,
        reason: &'static str,
    },

    #[error("no path found ({expanded} nodes expanded): {reason}")]
    NoPath { expanded: usize, reason: String },

    #[error("unsupported file format: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn scene(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidScene {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
