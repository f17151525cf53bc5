use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    /// An operation was handed input that violates its documented precondition,
    /// e.g. slicing a Laplacian on a node set that is not a basis bicomponent.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The graph does not have the connectivity an operation requires.
    #[error("graph structure: {0}")]
    Structure(String),

    #[error("time {t} lies beyond the end of the schedule ({end})")]
    OutOfRange { t: f64, end: f64 },

    #[error("model mismatch: {0}")]
    Model(String),

    #[error("state diverged at t = {time}: {reason}")]
    Diverged { time: f64, reason: String },

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("invalid scenario: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
