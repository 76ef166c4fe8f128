use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QusError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("nonpositive value {value} at frequency index {freq}, depth index {depth}")]
    NonPositive { freq: usize, depth: usize, value: f64 },

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("degenerate dynamic range: upper threshold {upper} <= lower threshold {lower}")]
    DegenerateRange { upper: f64, lower: f64 },

    #[error("singular system at depth index {depth} (condition estimate {condition:.3e})")]
    Singular { depth: usize, condition: f64 },

    #[error("system is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("empty input: {0}")]
    Empty(String),
}

pub type Result<T> = std::result::Result<T, QusError>;
