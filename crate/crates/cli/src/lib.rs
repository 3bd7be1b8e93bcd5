//! Library surface of the CLI: configuration, file formats, and command
//! implementations, kept callable so integration tests can drive them
//! without spawning processes.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use config::Config;
pub use error::{CliError, CliResult};
