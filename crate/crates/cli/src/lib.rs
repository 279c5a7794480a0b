//! Library side of the `portrayal` command: configuration and subcommands.

pub mod commands;
pub mod config;
pub mod error;
mod plot;

pub use config::{Overrides, RunConfig};
pub use error::CliError;
