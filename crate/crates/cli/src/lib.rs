//! Library side of the `calabi` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run_command, Command, Outcome};
pub use config::{ConfigError, RunConfig};
