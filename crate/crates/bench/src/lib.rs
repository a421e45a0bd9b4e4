//! Command-line harness around `spgemm-core`.

pub mod cli;
pub mod commands;
pub mod corpus;
pub mod error;
pub mod report;

pub use commands::{run, Outcome};
pub use error::CliError;
