//! Error type shared by every module.

use thiserror::Error;

/// Failure modes of the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("layout error: {0}")]
    Layout(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("infinite divergence: {0}")]
    InfiniteDivergence(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("witness error: {0}")]
    Witness(String),
    #[error("guard violated: {0}")]
    Guard(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
