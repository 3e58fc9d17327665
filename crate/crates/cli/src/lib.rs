//! Command-line front end: CSV ingestion, model files, reports and the
//! `recalibrate`, `predict`, `partition`, `edit`, `simulate` and `diagnose`
//! subcommands.
//!
//! Exit codes: 0 success, 2 malformed input, 3 I/O failure, 4 when a coupled
//! simulation finds the complexity number increasing with the noise scale.

pub mod commands;
pub mod error;
pub mod model;
pub mod report;
pub mod table;

pub use commands::{run, Cli, Command};
pub use error::{CliError, CliResult};
pub use model::ModelFile;
