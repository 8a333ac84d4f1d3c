use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("format error: {0}")]
    Format(String),

    #[error("pixel ({row}, {col}) is outside a {height}x{width} raster")]
    Bounds {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("distance to an empty mask is undefined")]
    UndefinedDistance,

    #[error("training diverged: {0}")]
    Training(String),

    #[error("threshold tuning failed: {0}")]
    Tuning(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn shape(what: impl Into<String>) -> Self {
        Error::Shape(what.into())
    }

    pub(crate) fn param(what: impl Into<String>) -> Self {
        Error::Param(what.into())
    }

    pub(crate) fn format(what: impl Into<String>) -> Self {
        Error::Format(what.into())
    }
}
