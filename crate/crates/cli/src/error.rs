use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// The run description is malformed or refers to unusable inputs.
    #[error("{0}")]
    Config(String),

    /// Inputs were well-formed but a computation could not proceed.
    #[error("{0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    /// Wraps a library error, prefixing `context`, and sorts it by cause.
    pub fn from_core(context: &str, e: decomp_core::Error) -> CliError {
        let message = if context.is_empty() {
            e.to_string()
        } else {
            format!("{context}: {e}")
        };
        if e.is_numerical() {
            CliError::Numerical(message)
        } else {
            CliError::Config(message)
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches context to library results.
pub(crate) trait CoreContext<T> {
    fn context(self, what: &str) -> CliResult<T>;
}

impl<T> CoreContext<T> for decomp_core::Result<T> {
    fn context(self, what: &str) -> CliResult<T> {
        self.map_err(|e| CliError::from_core(what, e))
    }
}
