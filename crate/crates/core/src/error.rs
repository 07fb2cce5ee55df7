use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unknown code name `{0}`")]
    UnknownCode(String),
    #[error("index ({0}, {1}) out of range for code of size {2}")]
    IndexOutOfRange(usize, usize, usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("certificate rejected: {0}")]
    CertificateRejected(String),
    #[error("census has {count} pairs outside every bucket (first stray pair {first:?})")]
    StrayPairs { count: u64, first: (usize, usize) },
    #[error("matrix is not symmetric: max asymmetry {0:e}")]
    NotSymmetric(f64),
    #[error("rank mismatch: {0}")]
    RankMismatch(String),
    #[error("perturbation too large: {0}")]
    OutsideRegime(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
