//! Pipeline commands and the blind rating service.

pub mod commands;
pub mod error;
pub mod pipeline;
pub mod rating;

pub use commands::{run, Cli, Command};
pub use error::{CliError, Result};
