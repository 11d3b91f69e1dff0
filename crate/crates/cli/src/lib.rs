//! Library surface of the `kolmo` binary: configuration types, CSV/JSON
//! writers, and one entry point per subcommand, so integration tests can
//! drive commands in-process.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use error::{CliError, CliResult, EXIT_OK};
