//! Process-level failure classes and their stable exit codes.
//!
//! The executable distinguishes three outcomes beyond success: a
//! configuration that could not be parsed or validated (exit 3), a scenario
//! that ran to completion but failed one of its verification bounds (exit
//! 2), and any engine or filesystem failure (exit 1). Configuration errors
//! are raised before any output file is created, so a malformed run leaves
//! no partial output tree behind.

use std::path::PathBuf;

use thiserror::Error;

/// Exit code for a scenario whose checks ran but failed a bound.
pub const EXIT_TOLERANCE: u8 = 2;

/// Exit code for an invalid or unreadable configuration.
pub const EXIT_CONFIG: u8 = 3;

/// Exit code for engine or filesystem failures.
pub const EXIT_FAILURE: u8 = 1;

/// Everything that can abort a scenario run.
#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration file was missing, malformed, or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical routine rejected its inputs or lost stability.
    #[error(transparent)]
    Core(#[from] sburgers_core::Error),

    /// A filesystem operation failed; the path names the culprit.
    #[error("{}: {source}", path.display())]
    Io {
        /// File or directory the operation touched.
        path: PathBuf,
        /// Underlying I/O failure.
        source: std::io::Error,
    },
}

impl CliError {
    /// Builds a configuration error from anything printable.
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }

    /// Attaches a path to a raw I/O failure.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// The process exit code this failure maps to.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(_) | CliError::Io { .. } => EXIT_FAILURE,
        }
    }
}

/// Shorthand used across the crate.
pub type Result<T> = std::result::Result<T, CliError>;
