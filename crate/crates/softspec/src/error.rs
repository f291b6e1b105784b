//! Error type shared across the crate, with the process exit code each
//! category maps to: invalid input 2, numerical failure 3, I/O failure 4.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid specification, configuration, or geometry (exit code 2).
    #[error("config: {0}")]
    Config(String),

    /// A solver or rootfinder failed to meet its tolerance (exit code 3).
    #[error("numeric: {0}")]
    Numeric(String),

    /// Filesystem or serialization failure (exit code 4).
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        Error::Io(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Numeric(_) => 3,
            Error::Io(_) => 4,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        // Serde errors surface during config parsing; classify as config so a
        // malformed file exits 2, not 4.
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
