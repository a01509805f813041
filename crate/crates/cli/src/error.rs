use std::fmt;

use flatsomatic::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_EMPTY_VOCABULARY: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;
pub const EXIT_SHAPE: i32 = 5;

/// A failed command: the process exit code and the message for stderr.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn shape(message: impl Into<String>) -> Self {
        Self::new(EXIT_SHAPE, message)
    }

    pub fn config(violations: Vec<String>) -> Self {
        Error::Config(violations).into()
    }

    /// Prefixes the message with the file it came from.
    pub fn in_file(mut self, path: &std::path::Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. } | Error::Format(_) | Error::Json(_) => EXIT_PARSE,
            Error::EmptyVocabulary { .. } => EXIT_EMPTY_VOCABULARY,
            Error::Config(_) => EXIT_CONFIG,
            Error::Shape { .. } => EXIT_SHAPE,
            Error::Io { .. } | Error::Argument(_) => EXIT_FAILURE,
        };
        let message = match &e {
            Error::Config(v) => format!("invalid configuration:\n  - {}", v.join("\n  - ")),
            other => other.to_string(),
        };
        CliError::new(code, message)
    }
}
