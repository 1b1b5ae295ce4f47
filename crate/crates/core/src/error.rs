//! Shared error type for the toolkit.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value violated a type invariant or precondition (non-finite input,
    /// empty table, zero-length pulse, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Mathematically out-of-domain request (negative square root argument,
    /// zero denominator, unphysical population, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A fit could not be carried out: singular Jacobian, degenerate data, or
    /// no resolvable feature. A fit that merely hits the iteration cap is not
    /// an error; it returns a report with `converged = false`.
    #[error("fit failure: {0}")]
    FitFailure(String),

    /// Population extraction from a histogram failed (no pump peak above
    /// background).
    #[error("extraction failure: {0}")]
    ExtractionFailure(String),

    /// Schema or content error in a dataset file, with 1-based line number.
    #[error("data error at line {line}: {message}")]
    Data { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn fit(msg: impl Into<String>) -> Self {
        Error::FitFailure(msg.into())
    }

    pub fn data(line: usize, msg: impl Into<String>) -> Self {
        Error::Data {
            line,
            message: msg.into(),
        }
    }
}
