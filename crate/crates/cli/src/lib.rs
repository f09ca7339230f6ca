//! Batch driver for resolvent trace expansions: configuration, pipeline and artifact emission.

pub mod config;
pub mod run;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("computation failed: {0}")]
    Computation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for invalid input, 1 for everything that failed after validation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Computation(_) | CliError::Io(_) => 1,
        }
    }
}
