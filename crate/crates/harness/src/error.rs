use std::path::{Path, PathBuf};
use swarm_core::{ConfigError, SolverError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {msg}", .path.display())]
    Format { path: PathBuf, msg: String },
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(vec![msg.into()])
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }

    pub fn format(path: &Path, msg: impl ToString) -> Self {
        HarnessError::Format { path: path.to_path_buf(), msg: msg.to_string() }
    }

    /// Process exit code: 2 configuration, 3 numerical, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Numerical(_) => 3,
            HarnessError::Io { .. } | HarnessError::Format { .. } => 4,
        }
    }
}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        HarnessError::Config(e.messages().to_vec())
    }
}

impl From<SolverError> for HarnessError {
    fn from(e: SolverError) -> Self {
        match e.root() {
            SolverError::Config(_) => HarnessError::Config(vec![e.to_string()]),
            _ => HarnessError::Numerical(e.to_string()),
        }
    }
}
