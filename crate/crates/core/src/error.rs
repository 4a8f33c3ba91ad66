use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension {d} exceeds the limit {limit} for {what}")]
    DimensionTooLarge { what: &'static str, d: usize, limit: usize },
    #[error("{0} has no closed form")]
    NoClosedForm(&'static str),
    #[error("index {index} out of range [{lo}, {hi}]")]
    OutOfRange { index: i64, lo: i64, hi: i64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
