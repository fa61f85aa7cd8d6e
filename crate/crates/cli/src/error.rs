use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("run failed: {0}")]
    Run(String),
    #[error("replay mismatch at data row {row}: expected {expected:?}, got {actual:?}")]
    ReplayMismatch {
        row: usize,
        expected: String,
        actual: String,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for configuration problems, 3 for I/O, 1
    /// otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Run(_) | CliError::ReplayMismatch { .. } => 1,
        }
    }
}

impl From<dmb_core::Error> for CliError {
    fn from(e: dmb_core::Error) -> Self {
        use dmb_core::Error as E;
        match e {
            E::DimensionMismatch { .. } | E::Input(_) | E::Schedule(_) | E::Topology(_) | E::Config(_) => {
                CliError::Config(e.to_string())
            }
            E::Run(_) | E::Unsupported(_) | E::Solver(_) => CliError::Run(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
