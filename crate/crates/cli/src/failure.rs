use std::fmt;

use sumread_core::Error;

pub const EXIT_OK: i32 = 0;
/// A check ran and did not pass (grad-check, validate-pairs).
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_RECORD: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;

/// A command failure carrying its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(msg: impl fmt::Display) -> Self {
        Self {
            code: EXIT_USAGE,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        Self {
            code: EXIT_DATA,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn check(msg: impl fmt::Display) -> Self {
        Self {
            code: EXIT_CHECK_FAILED,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    /// Prefixes the message with where it happened.
    pub fn context(self, what: impl fmt::Display) -> Self {
        Self {
            code: self.code,
            error: self.error.context(what.to_string()),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Record(_) => EXIT_RECORD,
            _ => EXIT_DATA,
        };
        Self {
            code,
            error: e.into(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: EXIT_DATA,
            error: e.into(),
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;
