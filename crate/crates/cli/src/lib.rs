//! Library half of the experiment harness: config schemas and the
//! implementations behind the `generate`, `run` and `eval` subcommands.

pub mod commands;
pub mod config;
pub mod digest;
