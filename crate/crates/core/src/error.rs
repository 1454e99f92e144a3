use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected length {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("non-finite value at index {index} in {context}")]
    NonFinite { context: &'static str, index: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("diverged at step {step}: {reason}")]
    Divergence { step: u64, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: row {row}, column {column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that signal a numerically diverged run rather than bad input.
    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Divergence { .. } | Error::NonFinite { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
