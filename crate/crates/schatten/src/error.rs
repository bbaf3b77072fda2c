//! Error type shared by the whole crate.
//!
//! The variants map one-to-one onto the CLI exit codes: invalid input
//! (2), size guard (3), and validation failure (4). Numerical and range
//! failures are input-class errors: they signal data the algorithms
//! refuse to interpret, not internal bugs.

use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-contract input (bad dimensions, p > n, NaN entries, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Structurally valid input that breaks a numerical guarantee
    /// (e.g. a Gram matrix eigenvalue below the negativity tolerance).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A computation was refused because it exceeds a documented size guard.
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    /// A finite-precision result left the representable range (overflow to infinity).
    #[error("range error: {0}")]
    Range(String),

    /// A self-check or validation suite found a failing check.
    #[error("validation failure: {0}")]
    Validation(String),

    /// File system failure while reading an input.
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Unparseable input file content.
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Numerical(_)
            | Error::Range(_)
            | Error::Io { .. }
            | Error::Parse { .. } => 2,
            Error::SizeGuard(_) => 3,
            Error::Validation(_) => 4,
        }
    }
}
