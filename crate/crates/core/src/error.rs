use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A simulation would exceed the configured size cap.
    #[error("{what} needs dimension 2^{needed}, cap is 2^{cap}")]
    CapExceeded {
        what: &'static str,
        needed: usize,
        cap: usize,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn circuit(msg: impl Into<String>) -> Self {
        Error::InvalidCircuit(msg.into())
    }
}
