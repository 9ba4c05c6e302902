use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed graph structure (self-loops, out-of-range vertices, missing edges).
    #[error("invalid structure: {0}")]
    Structure(String),

    /// A caller broke an operation's precondition (shape mismatch, bad degree, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical failure in {context}: {message}")]
    Numerical { context: String, message: String },

    /// The optimiser produced a non-finite objective. `snapshot` holds the
    /// log-hyperparameters at the time of failure.
    #[error("non-finite ELBO at outer iteration {iteration}")]
    NonFiniteElbo { iteration: usize, snapshot: Vec<f64> },

    #[error("missing dataset file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("{file}:{line}: {message}")]
    Format {
        file: String,
        line: usize,
        message: String,
    },

    #[error("config field `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn numerical(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Numerical {
            context: context.into(),
            message: message.into(),
        }
    }
}
