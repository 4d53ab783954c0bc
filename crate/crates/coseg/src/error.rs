use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::checkpoint::CheckpointError;
use crate::csgf::CsgfError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Features {
        path: PathBuf,
        #[source]
        source: CsgfError,
    },
    #[error("{}: {source}", path.display())]
    Checkpoint {
        path: PathBuf,
        #[source]
        source: CheckpointError,
    },
    #[error("{}: {message}", path.display())]
    Json { path: PathBuf, message: String },
    #[error("{0}")]
    Config(String),
    #[error("training diverged at step {step} ({source}); last good checkpoint written to {}", checkpoint.display())]
    Diverged {
        step: usize,
        checkpoint: PathBuf,
        #[source]
        source: coseg_core::Error,
    },
    #[error(transparent)]
    Core(#[from] coseg_core::Error),
}

impl CliError {
    /// Short machine-readable tag printed with every failure.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Features { .. } => "format",
            CliError::Checkpoint { .. } => "checkpoint",
            CliError::Json { .. } => "data",
            CliError::Config(_) => "config",
            CliError::Diverged { .. } => "numeric",
            CliError::Core(e) => e.category(),
        }
    }

    pub(crate) fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
