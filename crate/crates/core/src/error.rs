use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the fluctuation-analysis library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates the documented domain of an operation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A numerical routine failed to converge or detected instability.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Observed data cannot be used by the requested estimator.
    #[error("data error: {0}")]
    Data(String),

    /// A configuration text could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
