use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A text input could not be parsed.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Parsed input is well formed but violates an ordering or consistency rule.
    #[error("validation error: {0}")]
    Validation(String),

    /// Configuration problem, located by section, key and line.
    #[error("config error in [{section}] key `{key}` (line {line}): {message}")]
    Config {
        section: String,
        key: String,
        line: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
