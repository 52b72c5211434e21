use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("client index {index} out of range for {clients} clients")]
    ClientOutOfRange { index: usize, clients: usize },

    #[error("client {0} has no samples")]
    EmptyClient(usize),

    #[error("empty candidate pool")]
    EmptyPool,

    #[error("cannot draw {requested} clients without replacement from a pool of {available}")]
    PoolTooSmall { requested: usize, available: usize },

    #[error("aggregation weights sum to {0}, expected 1")]
    WeightSum(f64),

    #[error("non-finite parameters in round {round}, client {client}")]
    Divergence { round: usize, client: usize },

    #[error("degenerate skew denominator {0:e}")]
    DegenerateDenominator(f64),

    #[error("every grid point was degenerate ({0} skipped)")]
    DegenerateGrid(usize),

    #[error("optimizer failed to converge: {0}")]
    Optimization(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("learning rate {eta} exceeds the admissible cap {cap}")]
    LearningRateCap { eta: f64, cap: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what}: {detail}")]
    Format { what: String, detail: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: impl Into<String>, detail: impl ToString) -> Self {
        Error::Format {
            what: what.into(),
            detail: detail.to_string(),
        }
    }
}
