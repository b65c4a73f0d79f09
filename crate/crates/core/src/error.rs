use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("singular or near-singular matrix (|det| = {det:e})")]
    Singular { det: f64 },

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid step measure: {0}")]
    InvalidMeasure(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("configuration refused: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
