use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by the command line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("graph error: {0}")]
    Graph(String),

    #[error("unsupported transform length {len}: {supported}")]
    UnsupportedLength { len: usize, supported: &'static str },

    #[error("no dependence: the probed output does not depend on any input pixel")]
    NoDependence,

    #[error("missing gradient for parameter `{0}`")]
    MissingGradient(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("solver diverged: {0}")]
    Divergence(String),

    #[error("corrupt manifest: {0}")]
    CorruptManifest(String),

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    TruncatedPayload { expected: u64, actual: u64 },

    #[error("shape mismatch in stored data: {0}")]
    StoredShapeMismatch(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidArgument(_) => ErrorClass::Usage,
            Error::NonFinite(_) | Error::Divergence(_) | Error::NoDependence => ErrorClass::Numeric,
            Error::Shape(_)
            | Error::Graph(_)
            | Error::UnsupportedLength { .. }
            | Error::MissingGradient(_) => ErrorClass::Numeric,
            Error::CorruptManifest(_)
            | Error::TruncatedPayload { .. }
            | Error::StoredShapeMismatch(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => ErrorClass::Data,
        }
    }
}

macro_rules! shape_err {
    ($($arg:tt)*) => { $crate::error::Error::Shape(format!($($arg)*)) };
}
pub(crate) use shape_err;
