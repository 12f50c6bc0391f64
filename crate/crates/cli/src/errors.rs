//! CLI error type carrying the process exit code.
//!
//! Exit codes: 0 success, 2 validation error, 3 parse error, 4 I/O error.

use std::fmt;
use std::path::Path;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_PARSE: u8 = 3;
pub const EXIT_IO: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    /// Attach the file a library error came from, keeping its line context.
    pub fn in_file(path: &Path, err: framelab::Error) -> Self {
        CliError {
            code: exit_code(&err),
            message: format!("{}: {err}", path.display()),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError {
            code: EXIT_IO,
            message: format!("{}: {err}", path.display()),
        }
    }
}

fn exit_code(err: &framelab::Error) -> u8 {
    match err {
        framelab::Error::Parse { .. } => EXIT_PARSE,
        framelab::Error::Validation(_)
        | framelab::Error::NotFound { .. }
        | framelab::Error::Undefined(_) => EXIT_VALIDATION,
        framelab::Error::Io(_) => EXIT_IO,
    }
}

impl From<framelab::Error> for CliError {
    fn from(err: framelab::Error) -> Self {
        CliError {
            code: exit_code(&err),
            message: err.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
