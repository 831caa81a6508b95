use junta_core::JuntaError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] JuntaError),

    #[error("output failed: {0}")]
    Output(#[from] std::io::Error),

    #[error("output failed: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for invalid configuration, 3 for oracle failures, 1 for output errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Core(JuntaError::ZeroMass | JuntaError::SourceExhausted { .. }) => 3,
            Self::Core(_) => 2,
            Self::Output(_) | Self::Csv(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn config_err<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Config(msg.into()))
}
