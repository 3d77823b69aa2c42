use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Incompatible tensor/matrix shapes or out-of-range mode numbers.
    #[error("shape error: {0}")]
    Shape(String),

    /// Rejected configuration or argument values.
    #[error("invalid argument: {0}")]
    Invalid(String),

    /// A numerical routine failed to produce a usable result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Malformed file contents; `offset` is the byte position of the
    /// first inconsistency.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn parse(offset: u64, msg: impl Into<String>) -> Self {
        Error::Parse { offset, message: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
