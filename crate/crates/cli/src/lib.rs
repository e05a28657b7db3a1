//! Command-line frontend: argument types, file formats and commands.

pub mod commands;
pub mod error;
pub mod formats;

pub use commands::{run, Cli};
pub use error::{CliError, Result};
