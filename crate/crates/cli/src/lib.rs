//! Command-line front end: configuration handling and the `compress`,
//! `table` and `norms` commands.

pub mod commands;
pub mod config;

pub use commands::run;
pub use config::{Cli, RunConfig};
