//! File formats: Bookshelf input, `.pl`/SVG output and the metrics CSV.

pub mod bookshelf;
pub mod metrics;
pub mod svg;

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// A syntax or consistency error. `line` is 1-based, 0 when the error
/// concerns the file as a whole.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub file: &'static str,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "{} line {}: {}", self.file, self.line, self.message)
        } else {
            write!(f, "{}: {}", self.file, self.message)
        }
    }
}

impl ParseError {
    /// Replaces the file kind by the concrete path in the message.
    fn at(mut self, path: &Path) -> Self {
        self.message = format!("{} ({})", self.message, path.display());
        self
    }
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Parse(#[from] ParseError),
}
