use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid arguments or malformed inputs.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An exhaustive search tripped a complexity guard. The message names the
    /// cap and which knob raises it.
    #[error("resource guard: {what} exceeds cap {cap}; raise it with {override_hint}")]
    ResourceGuard {
        what: String,
        cap: usize,
        override_hint: String,
    },

    /// Numerical failure (singular matrix, non-positive-definite input, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn guard(what: impl Into<String>, cap: usize, override_hint: impl Into<String>) -> Self {
        Error::ResourceGuard {
            what: what.into(),
            cap,
            override_hint: override_hint.into(),
        }
    }

    /// True when the error is a tripped complexity guard (CLI exit code 3).
    pub fn is_resource_guard(&self) -> bool {
        matches!(self, Error::ResourceGuard { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
