use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("chain is absorbed (no patches left)")]
    Absorbed,

    #[error("chain is exhausted (all {0} vertices removed)")]
    Exhausted(u64),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("step size too large: {0}")]
    StepSize(String),

    #[error("bracket error: {0}")]
    Bracket(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
