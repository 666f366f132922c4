use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure category, stable across error variants.
///
/// The CLI maps these onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    MissingFile,
    Io,
    Validation,
    DimensionMismatch,
    JudgeMiss,
    InvalidArgument,
    Training,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", path.display())]
    MissingFile { path: PathBuf },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed or invariant-violating input, located by line (1-based) when
    /// the input is line-oriented.
    #[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Validation { line: Option<usize>, message: String },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("judge has no recorded {kind} response for generation {generation} claim {claim:?} (request {hash})")]
    JudgeMiss {
        kind: String,
        hash: String,
        generation: String,
        claim: Option<usize>,
    },

    #[error("judge failure: {0}")]
    Judge(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training error: {0}")]
    Training(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::MissingFile { .. } => ErrorKind::MissingFile,
            Error::Io { .. } => ErrorKind::Io,
            Error::Validation { .. } => ErrorKind::Validation,
            Error::DimensionMismatch { .. } => ErrorKind::DimensionMismatch,
            Error::JudgeMiss { .. } => ErrorKind::JudgeMiss,
            Error::Judge(_) => ErrorKind::Validation,
            Error::InvalidArgument(_) => ErrorKind::InvalidArgument,
            Error::Training(_) => ErrorKind::Training,
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::Validation {
            line: None,
            message: message.into(),
        }
    }

    pub(crate) fn at_line(line: usize, message: impl Into<String>) -> Self {
        Error::Validation {
            line: Some(line),
            message: message.into(),
        }
    }

    pub(crate) fn dims(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }

    /// Attaches a line number to a validation error that lacks one.
    pub(crate) fn with_line(self, line: usize) -> Self {
        match self {
            Error::Validation { line: None, message } => Error::Validation {
                line: Some(line),
                message,
            },
            other => other,
        }
    }

    /// Wraps an I/O error, turning `NotFound` into [`Error::MissingFile`].
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile { path }
        } else {
            Error::Io { path, source }
        }
    }
}
