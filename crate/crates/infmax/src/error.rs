//! Crate-wide error type.
//!
//! Variants map onto the CLI exit-code categories: invalid inputs and
//! rejected preconditions (2), file/parse problems (3), numeric failures
//! such as non-convergence or divergent training (4).

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an operation's inputs was violated.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Reading or writing a file failed at the OS level.
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file was readable but its contents did not match the expected format.
    #[error("parse error in {path} (line {line}): {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// An iterative numeric procedure failed (non-convergence, NaN loss).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Exhaustive enumeration would exceed the subset budget.
    #[error("combinatorial guard exceeded: {count} subsets to enumerate (limit {limit})")]
    SubsetBudget { count: u128, limit: u128 },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// Exit-code category used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_) | Error::SubsetBudget { .. } => 2,
            Error::Io { .. } | Error::Parse { .. } => 3,
            Error::Numeric(_) => 4,
        }
    }
}
