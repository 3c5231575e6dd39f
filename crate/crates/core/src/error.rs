use thiserror::Error;

/// Errors produced by dataset ingestion, problem construction and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: no samples found")]
    EmptyInput,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: feature indices must be strictly increasing")]
    NonIncreasingIndex { line: usize },

    #[error("block {0} intersects the support of no sample")]
    DeadBlock(usize),

    #[error("invalid block partition: {0}")]
    InvalidPartition(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("backtracking line search exceeded {0} doublings")]
    BacktrackingFailed(usize),

    #[error("regularization search failed: {0}")]
    Bisection(String),

    #[error(
        "checkpoint {index} is {gap:e} below the reference optimum; the cached optimum is stale"
    )]
    StaleOptimum { index: usize, gap: f64 },

    #[error("worker failure: {0}")]
    Worker(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
