use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("{path}: lattice incomplete, {missing} of {expected} grid points have no value (first missing at H-node {first_h}, K-node {first_k})")]
    LatticeIncomplete { path: PathBuf, missing: usize, expected: usize, first_h: usize, first_k: usize },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Numeric(#[from] semigabor::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 1 numerical failure, 2 usage or config error, 3 I/O or file format error.
    pub fn exit_code(&self) -> u8 {
        use semigabor::Error as E;
        match self {
            CliError::Io { .. } | CliError::Format { .. } => 3,
            CliError::Numeric(E::DegenerateWindowSlice { .. } | E::NearOrthogonalWindows { .. } | E::ZeroSignal) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
