use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error in {location}: {message}")]
    Validation { location: String, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn validation(location: impl Into<String>, message: impl ToString) -> Self {
        CliError::Validation {
            location: location.into(),
            message: message.to_string(),
        }
    }

    /// 2 for anything that stops a scenario from running at all.
    pub fn exit_code(&self) -> i32 {
        2
    }
}
