//! Library side of the `earl` command-line tool.

pub mod commands;
pub mod config;

use earl_core::EarlError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration, arguments or input files; exit code 2.
    #[error("{0}")]
    Config(String),
    /// Failure while running or writing results; exit code 3.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(e: EarlError) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}
