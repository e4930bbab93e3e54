use std::fmt;

/// CLI failure classes, mapped onto process exit codes:
/// usage -> 1, data -> 2, runtime -> 3.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
            CliError::Runtime(msg) => write!(f, "runtime failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<bta_core::Error> for CliError {
    fn from(err: bta_core::Error) -> Self {
        use bta_core::Error::*;
        match err {
            InvalidSpec(_) | InvalidData(_) | NoObservations => CliError::Data(err.to_string()),
            _ => CliError::Runtime(err.to_string()),
        }
    }
}

pub fn data_err(msg: impl Into<String>) -> CliError {
    CliError::Data(msg.into())
}

pub fn runtime_err(msg: impl Into<String>) -> CliError {
    CliError::Runtime(msg.into())
}
