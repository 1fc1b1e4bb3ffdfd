use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid k-set: {0}")]
    InvalidKSet(String),
    #[error("cardinality mismatch: {left} vs {right}")]
    CardinalityMismatch { left: usize, right: usize },
    #[error("empty family")]
    EmptyFamily,
    #[error("rank {rank} out of range for C({n},{k})")]
    RankOutOfRange { rank: u64, n: usize, k: usize },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("C({n},{k}) is too large to enumerate")]
    UniverseTooLarge { n: usize, k: usize },
    #[error("k-set {0} is already decided with the opposite sign")]
    Conflict(String),
    #[error("LP solver fault: {0}")]
    LpFault(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("proof replay failed at line {line}: {msg}")]
    Replay { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
