//! `aetheria` command-line tools and HTTP service.

pub mod cli;
pub mod commands;
pub mod review;
pub mod runtime;
pub mod server;
pub mod settings;

use aetheria_core::curator::CuratorError;
use aetheria_core::eval::{DatasetError, HarnessError};
use aetheria_core::library::LibraryError;
use aetheria_core::log_store::LogStoreError;
use thiserror::Error;

pub use cli::Cli;
pub use commands::run;

/// Process exit code for a moderation run that completed.
pub const EXIT_OK: u8 = 0;
/// Configuration, input or storage failure.
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_INVALID_OUTPUT: u8 = 2;
pub const EXIT_PROVIDER_ERROR: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("input: {0}")]
    Input(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Curator(#[from] CuratorError),
    #[error(transparent)]
    Store(#[from] LogStoreError),
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error(transparent)]
    Review(#[from] review::ReviewError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}
