use std::path::PathBuf;

/// Errors raised by the experiment runner, file formats and CLI.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] drwave_core::Error),

    #[error("config not found: {0}")]
    ConfigNotFound(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed config: {0}")]
    Schema(#[from] serde_json::Error),

    #[error("invalid experiment: {0}")]
    InvalidSpec(String),

    #[error("replication {replication} at n = {n} failed: {source}")]
    Replication {
        n: usize,
        replication: usize,
        #[source]
        source: drwave_core::Error,
    },

    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

impl LabError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// Process exit code: configuration and usage problems map to 2.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::ConfigNotFound(_) | Self::Schema(_) | Self::InvalidSpec(_) => 2,
            Self::Core(drwave_core::Error::InvalidConfig(_) | drwave_core::Error::BudgetViolated { .. }) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
