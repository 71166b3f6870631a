use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    MdpFile {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Model(#[from] mgrl_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
    #[error("{0} check(s) failed")]
    Failed(usize),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 pass, 1 failed assertion, 2 usage or config, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) | CliError::MdpFile { .. } => 1,
            CliError::Usage(_) | CliError::Config { .. } | CliError::Model(_) | CliError::Checkpoint { .. } => 2,
            CliError::Io { .. } => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
