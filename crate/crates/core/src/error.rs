use std::fmt;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Malformed JSON document, located by byte offset.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// A single record is unusable (bad line, missing answers, ...).
    #[error("{0}")]
    Record(RecordError),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}

/// Where a record-level error was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordLocation {
    /// 1-based line number in a line-delimited file.
    Line(usize),
    /// Record identifier (e.g. a SQuAD qa id).
    Id(String),
}

/// A problem confined to one input record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordError {
    pub location: RecordLocation,
    pub message: String,
}

impl RecordError {
    pub fn at_line(line: usize, message: impl Into<String>) -> Self {
        Self {
            location: RecordLocation::Line(line),
            message: message.into(),
        }
    }

    pub fn for_id(id: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            location: RecordLocation::Id(id.into()),
            message: message.into(),
        }
    }
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.location {
            RecordLocation::Line(n) => write!(f, "line {}: {}", n, self.message),
            RecordLocation::Id(id) => write!(f, "record {}: {}", id, self.message),
        }
    }
}

/// How record-level problems are handled while reading a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMode {
    /// Fail on the first record error.
    Strict,
    /// Skip bad records and collect their errors.
    #[default]
    Collect,
}

/// Records that parsed cleanly plus the errors collected along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Collected<T> {
    pub items: Vec<T>,
    pub errors: Vec<RecordError>,
}

impl<T> Collected<T> {
    pub(crate) fn new() -> Self {
        Self {
            items: Vec::new(),
            errors: Vec::new(),
        }
    }

    /// Routes a record error according to `mode`.
    pub(crate) fn reject(&mut self, mode: ErrorMode, err: RecordError) -> Result<()> {
        match mode {
            ErrorMode::Strict => Err(Error::Record(err)),
            ErrorMode::Collect => {
                self.errors.push(err);
                Ok(())
            }
        }
    }
}
