use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: missing required field `{field}`")]
    MissingField {
        path: String,
        line: usize,
        field: &'static str,
    },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("unknown id `{0}`: not present in the paired corpus")]
    UnknownId(String),

    #[error("missing entry for id `{0}`")]
    MissingId(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value at stage `{0}`")]
    NonFinite(String),

    #[error("matrix is not symmetric positive semi-definite: {0}")]
    NotPsd(String),

    #[error("embedding file: {0}")]
    Format(String),

    #[error("embedding service: {0}")]
    Service(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    /// Short stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::MissingField { .. } => "missing_field",
            Error::DuplicateId(_) => "duplicate_id",
            Error::UnknownId(_) => "unknown_id",
            Error::MissingId(_) => "missing_id",
            Error::InvalidInput(_) => "invalid_input",
            Error::Shape(_) => "shape",
            Error::NonFinite(_) => "non_finite",
            Error::NotPsd(_) => "not_psd",
            Error::Format(_) => "format",
            Error::Service(_) => "service",
            Error::InsufficientData(_) => "insufficient_data",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
