use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error("{path}:{line}: column `{column}`: {message}")]
    Cell {
        path: String,
        line: u64,
        column: String,
        message: String,
    },

    #[error("{}: missing column `{column}` in header", path.display())]
    MissingColumn { path: PathBuf, column: String },

    #[error("{}: file contains no data rows", path.display())]
    EmptyFile { path: PathBuf },

    #[error("schema line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("value {value} at position {position} is outside [0, 1]")]
    OutOfRange { value: f64, position: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid measure `{0}`")]
    InvalidMeasure(String),

    #[error("preference store is empty")]
    EmptyStore,

    #[error("need at least {required} objects, got {got}")]
    TooFewObjects { required: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

impl Error {
    /// Broad class of the failure, used by the CLI for exit codes.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. } => ErrorCategory::Io,
            Error::Parse { .. }
            | Error::Cell { .. }
            | Error::MissingColumn { .. }
            | Error::EmptyFile { .. }
            | Error::Schema { .. }
            | Error::InvalidMeasure(_) => ErrorCategory::Parse,
            _ => ErrorCategory::Validation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Io,
    Parse,
    Validation,
}
