use thiserror::Error;

/// Errors raised across the pipeline.
#[derive(Debug, Error)]
pub enum PhError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("unsupported form-degree spec (p={p}, q={q}, n={n})")]
    UnsupportedSpec { p: usize, q: usize, n: usize },
    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),
    #[error("singular Hodge matrix: {0}")]
    SingularHodge(String),
    #[error("structure violation: {0}")]
    StructureViolation(String),
    #[error("rank deficiency: {0}")]
    RankDeficiency(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, PhError>;
