use std::fmt;

use litcal_core::{Error, ErrorKind};

/// A failure reported as one machine-parsable line on stderr.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub exit: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: "usage",
            exit: 1,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: "validation",
            exit: 3,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (kind, exit) = match e.kind() {
            ErrorKind::MissingFile => ("missing_file", 2),
            ErrorKind::Validation => ("validation", 3),
            ErrorKind::DimensionMismatch => ("dimension_mismatch", 4),
            ErrorKind::JudgeMiss => ("judge_miss", 5),
            ErrorKind::Io => ("io", 1),
            ErrorKind::InvalidArgument => ("invalid_argument", 1),
            ErrorKind::Training => ("training", 1),
        };
        Self {
            kind,
            exit,
            message: e.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let escaped: String = self
            .message
            .chars()
            .flat_map(|c| match c {
                '"' => vec!['\\', '"'],
                '\\' => vec!['\\', '\\'],
                '\n' => vec!['\\', 'n'],
                c => vec![c],
            })
            .collect();
        write!(f, "error kind={} exit={} message=\"{escaped}\"", self.kind, self.exit)
    }
}
