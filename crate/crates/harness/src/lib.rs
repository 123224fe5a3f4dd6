//! Command-line plumbing for semigabor: configuration, signal and field
//! files, and the verification, analysis and synthesis commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod gtf;
pub mod report;
pub mod signal;

pub use commands::{run, Command};
pub use config::{Overrides, Resolved};
pub use error::{CliError, Result};
pub use report::Report;
