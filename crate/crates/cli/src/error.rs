use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}: {message}")]
    Syntax { origin: String, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("invalid parameters: {0}")]
    Parameter(#[from] herald_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    /// Every variant is a configuration problem from the user's side.
    pub fn exit_code(&self) -> u8 {
        2
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
