use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

impl ConfigError {
    pub fn single(msg: impl Into<String>) -> Self {
        ConfigError::Invalid(vec![msg.into()])
    }

    pub fn messages(&self) -> &[String] {
        match self {
            ConfigError::Invalid(m) => m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericalError {
    #[error("{what} CFL violated: ratio {ratio:.4} exceeds {limit}")]
    Cfl { what: &'static str, ratio: f64, limit: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numerical(#[from] NumericalError),
    #[error("slice {slice}: {source}")]
    Slice {
        slice: usize,
        #[source]
        source: Box<SolverError>,
    },
}

impl SolverError {
    pub fn at_slice(self, slice: usize) -> Self {
        match self {
            s @ SolverError::Slice { .. } => s,
            other => SolverError::Slice { slice, source: Box::new(other) },
        }
    }

    /// The innermost error with slice context stripped.
    pub fn root(&self) -> &SolverError {
        match self {
            SolverError::Slice { source, .. } => source.root(),
            other => other,
        }
    }
}
