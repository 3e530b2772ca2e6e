use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    Dimension {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("parameter `{name}` (coordinate {index}) = {value} is outside the transform domain")]
    TransformDomain {
        index: usize,
        name: String,
        value: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("filter degeneracy at time index {n}: all particle weights are zero")]
    Degeneracy { n: usize },

    #[error("non-finite value at time index {n}: {what}")]
    NonFinite { n: usize, what: String },

    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("singular innovation covariance at time index {n}")]
    SingularCovariance { n: usize },

    #[error("schema mismatch in {file}: {detail}")]
    Schema { file: String, detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::Iteration {
            iteration,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
