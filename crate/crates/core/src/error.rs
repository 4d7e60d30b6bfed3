use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the range its owning module accepts.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("eigensolver did not converge at index {index} after {iterations} iterations")]
    NoConvergence { index: usize, iterations: usize },

    /// The quantity is undefined because the solution (or a norm) is numerically zero.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("shape mismatch: expected {expected} samples, got {got}")]
    Shape { expected: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
