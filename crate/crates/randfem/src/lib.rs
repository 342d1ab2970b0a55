//! Experiment harness and command-line front end for `randfem-core`: file
//! formats, timed realizations, parallel replication loops and the CLI.

pub mod app;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod study;
pub mod table1;

pub use error::{CliError, Result};
pub use randfem_core as core;
