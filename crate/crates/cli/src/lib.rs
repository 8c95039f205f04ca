//! Command implementations behind the `oa-som` binary.

pub mod commands;
pub mod error;
pub mod report;

pub use error::{CliError, CliResult};
