use std::path::PathBuf;

use thiserror::Error;

/// Failure of a subcommand, classified by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or out-of-range parameters.
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: image::ImageError },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: image::ImageError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    /// Readable inputs that cannot be used together.
    #[error("{0}")]
    Input(String),
    #[error("solver failed: {0}")]
    Solver(fgest_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Read { .. }
            | CliError::Write { .. }
            | CliError::Io(_)
            | CliError::Csv { .. }
            | CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<fgest_core::Error> for CliError {
    fn from(e: fgest_core::Error) -> Self {
        match e {
            fgest_core::Error::InvalidParameter { .. } => CliError::Usage(e.to_string()),
            fgest_core::Error::DimensionMismatch { .. } | fgest_core::Error::ChannelMismatch { .. } => {
                CliError::Input(e.to_string())
            }
            e => CliError::Solver(e),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
