//! Batch pipelines over the flatsomatic core: every subcommand reads its
//! inputs, runs one core operation and writes its outputs atomically with a
//! run manifest.
//!
//! Exit codes: 0 ok, 1 other failure, 2 parse, 3 empty vocabulary,
//! 4 configuration, 5 shape.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;

pub use error::{CliError, CliResult};
