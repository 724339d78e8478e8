use std::path::PathBuf;

use smi_core::SmiError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config or input data. Exit code 2.
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] SmiError),
    /// A verification step failed. Exit code 1.
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Io { .. } | Self::Core(_) | Self::CheckFailed(_) => 1,
        }
    }
}
