use std::path::{Path, PathBuf};

use thiserror::Error;

/// Failures of the driver, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical fault: {0}")]
    Numerical(String),
    #[error("{failed} of {total} acceptance criteria failed")]
    CriteriaFailed { failed: usize, total: usize },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CriteriaFailed { .. } => 1,
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Prefixes the message with what was being done.
    pub fn context(self, what: &str) -> Self {
        match self {
            CliError::Config(m) => CliError::Config(format!("{what}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{what}: {m}")),
            other => other,
        }
    }
}

impl From<hsbmo_core::Error> for CliError {
    fn from(e: hsbmo_core::Error) -> Self {
        use hsbmo_core::Error as E;
        match e {
            E::SpectralSplit { .. }
            | E::IllConditioned { .. }
            | E::SchurNonconvergence
            | E::QuadratureNonconvergence(_)
            | E::QuadratureFault(_)
            | E::NonFinite => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

/// Attaches context to fallible results.
pub trait Context<T> {
    fn context(self, what: &str) -> CliResult<T>;
}

impl<T, E: Into<CliError>> Context<T> for Result<T, E> {
    fn context(self, what: &str) -> CliResult<T> {
        self.map_err(|e| e.into().context(what))
    }
}
