use std::fmt;
use std::io;

#[derive(Debug)]
pub enum CliError {
    Lib(spinlab::Error),
    Param(String),
    Io(io::Error),
}

impl CliError {
    /// 2 for bad parameters, 3 for exceeded budgets, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Param(_) => 2,
            CliError::Lib(spinlab::Error::Param(_) | spinlab::Error::EmptySupport(_)) => 2,
            CliError::Lib(spinlab::Error::Budget(_)) => 3,
            CliError::Lib(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Param(m) => write!(f, "invalid parameter: {m}"),
            CliError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl From<spinlab::Error> for CliError {
    fn from(e: spinlab::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn bad<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Param(msg.into()))
}
