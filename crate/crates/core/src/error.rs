use thiserror::Error;

/// Errors raised by the geometry, volume and dataset routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),
    /// Malformed text input (calibration or label files).
    #[error("parse error: {0}")]
    Parse(String),
    /// Malformed binary input (velodyne scans, volumes, images).
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
