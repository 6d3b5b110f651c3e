//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain of an operation (endpoint of the unit
    /// interval, non-positive tolerance, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A map description that does not define an increasing homeomorphism
    /// with translation tails.
    #[error("invalid map: {0}")]
    InvalidMap(String),

    /// A system that fails one of the validity conditions.
    #[error("invalid system: {0}")]
    InvalidSystem(String),

    /// The linked-box or minimal construction could not be completed.
    #[error("construction failed: {0}")]
    Construction(String),

    /// A value that cannot be produced exactly (rational evaluation of a
    /// transport plan away from gap endpoints, for example).
    #[error("not exactly representable: {0}")]
    Inexact(String),

    /// The solver hit its iteration cap before the envelope closed.
    #[error("solver did not converge: {0}")]
    Solver(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
