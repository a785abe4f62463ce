use thiserror::Error;

/// Errors shared by every module.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or inputs.
    #[error("invalid parameter: {0}")]
    Param(String),
    /// A configured resource limit (state space, node or term budget) was exceeded.
    #[error("budget exceeded: {0}")]
    Budget(String),
    /// A pinning or subset leaves no configuration with positive weight.
    #[error("empty support: {0}")]
    EmptySupport(String),
    /// A numerical routine failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Param(msg.into()))
}

pub(crate) fn budget<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Budget(msg.into()))
}
