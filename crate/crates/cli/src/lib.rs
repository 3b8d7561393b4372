//! Command-line front end: instance files, reports, and the randomized
//! invariant suites.

pub mod commands;
pub mod error;
pub mod generate;
pub mod instance;
pub mod props;
pub mod report;

pub use commands::{Cli, Command, run};
pub use error::CliError;
