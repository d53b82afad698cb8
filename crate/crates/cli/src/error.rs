use thiserror::Error;
use tma_core::TmaError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] TmaError),
}

impl CliError {
    /// 1 for usage/config problems, 2 for numerical or degenerate input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(TmaError::Degenerate(_) | TmaError::InvalidSchedule(_)) => 2,
            _ => 1,
        }
    }
}
