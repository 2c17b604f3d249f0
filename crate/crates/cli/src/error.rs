use basket_core::PricingError;
use thiserror::Error;

/// A config that could not be read, parsed or validated.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },

    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

/// Top-level failure of a CLI command, mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("numerical failure: {0}")]
    Numerical(#[from] PricingError),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}
