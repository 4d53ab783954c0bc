//! File formats, run configuration and command implementations for the
//! `coseg` binary.

pub mod annotations;
pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod csgf;
pub mod error;
pub mod report;

pub use config::RunConfig;
pub use error::{CliError, Result};
