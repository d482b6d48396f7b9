use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid index sequence: {0}")]
    InvalidIndexSeq(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("unbounded")]
    Unbounded,

    #[error("degenerate")]
    Degenerate,

    #[error("polar undefined: origin is not an interior point")]
    PolarUndefined,

    #[error("interior required: {0}")]
    InteriorRequired(String),

    #[error("singular linear map (|det| = {0:e})")]
    Singular(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{rejected} of {samples} samples hit a vanishing volume under a negative power")]
    TooManyRejections { rejected: usize, samples: usize },

    #[error("non-integrable restriction: {0}")]
    NonIntegrable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("check `{name}` failed to run: {source}")]
    Check {
        name: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn body(msg: impl Into<String>) -> Self {
        Error::InvalidBody(msg.into())
    }
}
