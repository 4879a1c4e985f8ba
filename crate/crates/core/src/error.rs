use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("unsupported format: {0}")]
    Format(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("corrupt file {file}: {msg}")]
    Corruption { file: PathBuf, msg: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("unknown symbol {0:?}")]
    Vocabulary(String),

    #[error("no entry for segment {0:?}")]
    Lookup(String),

    #[error("input too short: {0}")]
    TooShort(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn corrupt(file: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Corruption {
            file: file.into(),
            msg: msg.into(),
        }
    }

    /// Process exit code for this error: 2 usage/input, 3 data format, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Format(_) | Error::Corruption { .. } => 3,
            Error::Numeric(_) => 4,
            _ => 2,
        }
    }
}
