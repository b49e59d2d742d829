use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate relaxation solution: {0}")]
    DegenerateSolution(String),

    #[error(
        "brute-force enumeration of {candidates} candidates exceeds the limit of {limit}; \
         lower P or L, or drop brute-force from the method list"
    )]
    EnumerationTooLarge { candidates: u128, limit: u64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by bad user input rather than numerics or I/O.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) | Error::EnumerationTooLarge { .. } => true,
            Error::Trial { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}
