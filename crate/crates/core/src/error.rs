use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("stability bound violated: {0}")]
    Stability(String),
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
