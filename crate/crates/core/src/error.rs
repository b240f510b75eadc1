use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// No step of the series can contribute to the exponent estimate.
    #[error("fit infeasible: {0}")]
    FitInfeasible(String),

    /// A record in an input file could not be parsed.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The requested work exceeds a configured resource cap.
    #[error("resource limit: {0}")]
    Resource(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
