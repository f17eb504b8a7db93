//! Command-line front end: file formats, instance generation, and the
//! `gen`, `sparsify`, `verify`, `bench` and `leverage` commands.
//!
//! Exit codes: 0 success, 1 usage or internal error, 2 radius check failed,
//! 3 an applicable attention bound was violated.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod generate;
pub mod report;

pub use commands::{cmd_bench, cmd_leverage, cmd_sparsify, cmd_verify, ingest, run_bench, run_pipeline, Sweep};
pub use config::{MethodArg, RunConfig};
pub use error::{exit, CliError};
pub use formats::Format;
pub use generate::generate;
pub use report::Report;
