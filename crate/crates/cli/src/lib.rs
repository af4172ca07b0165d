//! File formats, the experiment pipeline and the `ssam` command line.

pub mod artifacts;
pub mod checkpoint;
pub mod commands;
pub mod error;
pub mod experiment;
pub mod io;
pub mod manifest;

pub use error::{CliError, Result};
