//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad argument, shape or configuration value.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// NaN/inf or an undefined numeric quantity.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("manifest {path}:{line}: {msg}")]
    Manifest {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// Weight file could not be decoded or does not match the model.
    #[error("weight file error at tensor `{tensor}`: {msg}")]
    Weights { tensor: String, msg: String },

    #[error("model build error in {branch}: {msg}")]
    Build { branch: String, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {msg}")]
    Image { path: PathBuf, msg: String },

    #[error("training aborted at epoch {epoch}, batch {batch}: {msg}")]
    Training {
        epoch: usize,
        batch: usize,
        msg: String,
    },
}

impl Error {
    pub fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 validation, 2 runtime, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Config(_) | Error::Manifest { .. } | Error::Build { .. } => 1,
            Error::Numeric(_) | Error::Training { .. } | Error::Weights { .. } => 2,
            Error::Io { .. } | Error::Image { .. } => 3,
        }
    }

    /// Short machine-parseable category used on the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::Numeric(_) => "numeric",
            Error::Manifest { .. } => "manifest",
            Error::Weights { .. } => "weights",
            Error::Build { .. } => "build",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Image { .. } => "image",
            Error::Training { .. } => "training",
        }
    }
}
