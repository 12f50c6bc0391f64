//! Error types shared across the toolkit.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by parsers, validators, and metric kernels.
///
/// The variants are deliberately coarse: callers (notably the CLI) map them
/// onto exit codes, so what matters is the parse / validation / undefined /
/// I/O distinction, not a fine-grained taxonomy.
#[derive(Debug, Error)]
pub enum Error {
    /// Input text could not be decoded. `line` is 1-based and refers to the
    /// physical line of the offending input.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Input decoded but violates a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A referenced identifier does not exist.
    #[error("{kind} not found: {id}")]
    NotFound { kind: &'static str, id: String },

    /// A quantity has no defined value for the given input
    /// (e.g. AUC with an empty side, priors of an empty corpus).
    #[error("undefined: {0}")]
    Undefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn not_found(kind: &'static str, id: impl Into<String>) -> Self {
        Error::NotFound {
            kind,
            id: id.into(),
        }
    }

    pub(crate) fn undefined(msg: impl Into<String>) -> Self {
        Error::Undefined(msg.into())
    }
}
