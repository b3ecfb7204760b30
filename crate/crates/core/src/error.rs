use thiserror::Error;

#[derive(Debug, Error)]
pub enum RisError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("conic solver error: {0}")]
    Solver(String),
    #[error("zero-magnitude entry at index {0}: phase is ambiguous")]
    ZeroMagnitude(usize),
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
