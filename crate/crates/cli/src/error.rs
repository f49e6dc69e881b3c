use std::path::PathBuf;

use conceptor_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Core(#[from] CoreError),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for invalid input, 3 when training or generation fails, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 4,
            CliError::Core(e) => match e {
                CoreError::Config(_)
                | CoreError::Dimension { .. }
                | CoreError::Range { .. }
                | CoreError::Aperture(_)
                | CoreError::Parse { .. } => 2,
                CoreError::NoConvergence { .. }
                | CoreError::Singular { .. }
                | CoreError::Divergence { .. }
                | CoreError::ZeroVariance
                | CoreError::Integration { .. } => 3,
                CoreError::Io { .. } => 4,
            },
        }
    }
}
