use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type. `exit_code` maps each variant onto the stable
/// CLI exit codes: 1 for validation/data errors, 2 for missing resources.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("missing column '{column}' in {path}")]
    MissingColumn { column: String, path: PathBuf },

    #[error("malformed CSV row {row} in {path}: {message}")]
    MalformedRow {
        row: usize,
        path: PathBuf,
        message: String,
    },

    #[error("lexicon error: {0}")]
    Lexicon(String),

    #[error("invalid data: {0}")]
    Invalid(String),

    #[error("line {line}: {message}")]
    ParseLine { line: usize, message: String },

    #[error("model error: {0}")]
    Model(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable CLI exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingFile(_) => 2,
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
