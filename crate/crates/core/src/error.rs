use thiserror::Error;

/// Errors raised by mesh construction, assembly, the time stepper and the
/// verification drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("singular linear system in {stage} (column {column})")]
    Singular { stage: &'static str, column: usize },

    #[error("non-finite solution produced by {stage}")]
    Divergence { stage: &'static str },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("step {index}: {source}")]
    Step {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn at_step(self, index: usize) -> Self {
        Error::Step {
            index,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_level(self, level: usize) -> Self {
        Error::Level {
            level,
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping step/level annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } | Error::Level { source, .. } => source.root(),
            other => other,
        }
    }
}
