use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by argument validation across the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scalar argument fell outside the mathematical domain of an operation.
    Domain { name: &'static str, value: f64 },
    /// Two sequences or coordinate vectors had incompatible lengths.
    DimensionMismatch { expected: usize, found: usize },
    /// Any other violated precondition.
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { name, value } => write!(f, "{name} = {value} is outside the admissible domain"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidArgument(msg) => f.write_str(msg),
        }
    }
}

impl core::error::Error for Error {}
