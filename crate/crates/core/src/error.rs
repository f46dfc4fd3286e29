use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}: {message}")]
    Ingest {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{path}: file contains no series")]
    EmptyFile { path: PathBuf },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(
        "window length {window_len} exceeds series length {series_len}; shrink the window length L_S"
    )]
    WindowTooLong {
        window_len: usize,
        series_len: usize,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("class {0} has no samples")]
    EmptyClass(usize),

    #[error("class {class} has {available} samples, {requested} requested")]
    ClassTooSmall {
        class: usize,
        available: usize,
        requested: usize,
    },

    #[error("non-finite loss {loss} at epoch {epoch} (parameter norms: {norms:?})")]
    NonFiniteLoss {
        epoch: usize,
        loss: f64,
        norms: [f64; 4],
    },

    #[error("mismatched task lists: {0}")]
    MismatchedTasks(String),

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the input data rather than by configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Ingest { .. }
                | Error::EmptyFile { .. }
                | Error::WindowTooLong { .. }
                | Error::DimensionMismatch { .. }
                | Error::EmptyClass(_)
                | Error::ClassTooSmall { .. }
                | Error::Empty(_)
                | Error::Json(_)
        )
    }
}
