use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    ConfigParse { path: PathBuf, source: serde_json::Error },

    #[error("{path}: {message}")]
    ConfigInvalid { path: PathBuf, message: String },

    #[error("cannot read {path}: {source}")]
    ConfigRead { path: PathBuf, source: std::io::Error },

    #[error("{path}: {source}")]
    Input { path: PathBuf, source: hdinfer::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Run(#[from] hdinfer::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// `1` for anything wrong with the invocation or its config, `2` for
    /// failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::ConfigParse { .. } | Self::ConfigInvalid { .. } | Self::ConfigRead { .. } => 1,
            Self::Input { .. } | Self::Write { .. } | Self::Run(_) | Self::Json(_) => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
