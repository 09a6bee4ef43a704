//! Error type carrying the process exit code.

use std::fmt;

use forgesim::ForgeError;

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;
pub const EXIT_RESOURCE: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    pub fn io(what: &str, err: std::io::Error) -> Self {
        Failure { code: EXIT_VALIDATION, message: format!("{what}: {err}") }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ForgeError> for Failure {
    fn from(err: ForgeError) -> Self {
        let code = match &err {
            ForgeError::Argument(_) | ForgeError::Format(_) => EXIT_USAGE,
            ForgeError::Resource(_) => EXIT_RESOURCE,
            ForgeError::Training { .. } => EXIT_DIVERGED,
            _ => EXIT_VALIDATION,
        };
        Failure { code, message: err.to_string() }
    }
}
