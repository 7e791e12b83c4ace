use std::io;

use thiserror::Error;

/// Errors produced anywhere in the codec.
///
/// The variants are grouped into the three classes the command line maps to
/// exit codes: validation (2), format/corruption (3) and I/O (4).
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("corrupt section `{section}`: {detail}")]
    Corrupt { section: String, detail: String },

    #[error("truncated stream at byte {position}")]
    Truncated { position: usize },

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn corrupt(section: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Corrupt {
            section: section.into(),
            detail: detail.into(),
        }
    }

    /// Attach a section name to stream-level failures.
    pub(crate) fn in_section(self, section: &str) -> Self {
        match self {
            Error::Truncated { position } => {
                Error::corrupt(section, format!("truncated stream at byte {position}"))
            }
            Error::Format(detail) => Error::corrupt(section, detail),
            Error::Encoding(detail) => Error::corrupt(section, detail),
            other => other,
        }
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Domain(_) | Error::Encoding(_) => 2,
            Error::Format(_) | Error::Corrupt { .. } | Error::Truncated { .. } => 3,
            Error::Io(_) => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
