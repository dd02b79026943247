//! Crate error type.

use thiserror::Error;

/// Errors surfaced by the library.
///
/// The three variants map onto distinct failure classes so that callers (and
/// the CLI) can translate them into stable exit codes:
///
/// * [`Error::Config`] — an invalid parameter or shape mismatch detected
///   before any heavy computation starts.
/// * [`Error::Data`] — malformed or inconsistent input data (unreadable
///   files, out-of-range indices, duplicate entries, empty masks).
/// * [`Error::Numerical`] — a computation that started out well-posed but
///   failed to make progress (divergence, SVD failure, exhausted retries).
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad hyperparameter, impossible architecture,
    /// or mismatched dimensions supplied by the caller.
    #[error("configuration error: {0}")]
    Config(String),

    /// Invalid or inconsistent input data.
    #[error("data error: {0}")]
    Data(String),

    /// Numerical failure during computation.
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl Error {
    /// Shorthand for a [`Error::Config`] with a formatted message.
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Shorthand for a [`Error::Data`] with a formatted message.
    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    /// Shorthand for a [`Error::Numerical`] with a formatted message.
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
