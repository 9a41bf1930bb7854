//! Command-line front end for feature ranking, attention and the
//! self-verification suite.

pub mod commands;
pub mod config;
pub mod error;
pub mod input;

pub use commands::{execute, Outcome};
pub use config::{Command, Format, Method, RunConfig};
pub use error::CliError;
