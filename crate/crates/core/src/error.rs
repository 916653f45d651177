use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate discretization: every sample value equals {0}")]
    DegenerateSample(f64),

    #[error("thinning fraction {p} leaves {train} training and {validation} validation nodes")]
    DegenerateThinning { p: f64, train: usize, validation: usize },

    #[error("no nearest-neighbour pair has both endpoints in the sample")]
    NoSamplePairs,

    #[error("node {0} has no label assigned")]
    Unassigned(usize),

    #[error("node {0} is frozen")]
    FrozenNode(usize),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("{needed} sample nodes required, only {available} available")]
    NotEnoughSamples { needed: usize, available: usize },

    #[error("at least {needed} values required, got {got}")]
    TooFewValues { needed: usize, got: usize },

    #[error("validation mask is empty")]
    EmptyMask,

    #[error("covariance matrix is not positive definite after {attempts} jitter attempts")]
    NotPositiveDefinite { attempts: u32 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
