use std::path::PathBuf;

use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Rejected configuration; `key` is the dotted path of the offending entry.
    #[error("{}: {}{message}", path.display(), key.as_deref().map(|k| format!("at `{k}`: ")).unwrap_or_default())]
    Config {
        path: PathBuf,
        key: Option<String>,
        message: String,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Solver(#[from] critles::Error),
}

impl CliError {
    pub(crate) fn config(
        path: impl Into<PathBuf>,
        key: Option<&str>,
        message: impl Into<String>,
    ) -> Self {
        CliError::Config {
            path: path.into(),
            key: key.map(str::to_string),
            message: message.into(),
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit status: 2 for bad input, 3 for a blown-up run, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Solver(critles::Error::BlowUp { .. }) => 3,
            _ => 1,
        }
    }
}
