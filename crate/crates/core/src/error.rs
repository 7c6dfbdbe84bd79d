use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the beamforming and segmentation engines.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (dimensions, empty input, bad parameter).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Non-finite values appeared in inputs or intermediate state.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A covariance or normalizer lost positive definiteness.
    #[error("singular system: {0}")]
    Singular(String),

    /// Invalid experiment or scenario configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Self::Contract(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Self::Numeric(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Contract(_) => 2,
            Self::Numeric(_) | Self::Singular(_) => 3,
            Self::Io { .. } => 4,
        }
    }
}
