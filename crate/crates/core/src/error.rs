use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    /// The working precision cannot certify the requested quantity.
    #[error("insufficient precision: {0}")]
    Precision(String),
    /// Memory or time budget would be exceeded.
    #[error("budget exceeded: {0}")]
    Budget(String),
    /// An arithmetic invariant of the construction failed. Never expected.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    /// A numerical check contradicted a claimed identity or bound.
    #[error("falsified: {0}")]
    Falsified(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
