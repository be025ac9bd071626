//! Library half of the `clues` binary: argument definitions, command
//! execution and the exit-code taxonomy.
//!
//! Exit codes: 0 success, 1 other failure, 2 unreadable or malformed input,
//! 3 input that parses but is invalid or degenerate, 4 a convergence warning
//! under `--fail-on-warning`.

pub mod args;
mod commands;
mod compare;
pub mod output;

pub use args::{Cli, Command};
pub use commands::execute;
pub use compare::THREADS_VAR;

use std::fmt;
use std::path::Path;

use clues::Error;

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    /// Outputs were written, but the run raised warnings the caller asked
    /// to treat as errors.
    Warning(Vec<String>),
    Other(String),
}

impl Failure {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::Core(Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        )))
    }

    /// Prefixes the message with the file it came from, keeping the category.
    pub fn in_file(path: &Path, e: Error) -> Self {
        let at = |m: String| format!("{}: {m}", path.display());
        Failure::Core(match e {
            Error::Parse(m) => Error::Parse(at(m)),
            Error::Validation(m) => Error::Validation(at(m)),
            Error::Degenerate(m) => Error::Degenerate(at(m)),
            Error::Empty(m) => Error::Empty(at(m)),
            Error::Io(e) => Error::Io(std::io::Error::new(e.kind(), at(e.to_string()))),
        })
    }

    pub fn code(&self) -> u8 {
        match self {
            Failure::Core(Error::Parse(_) | Error::Io(_)) => 2,
            Failure::Core(Error::Validation(_) | Error::Degenerate(_) | Error::Empty(_)) => 3,
            Failure::Warning(_) => 4,
            Failure::Other(_) => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Warning(w) => write!(f, "warnings treated as errors: {}", w.join("; ")),
            Failure::Other(m) => f.write_str(m),
        }
    }
}
