//! Configuration-driven front end: runs, parameter checks, grids, sweeps and
//! trace certification.

pub mod commands;
pub mod config;
pub mod trace_csv;

use std::fmt;

pub use commands::{
    cmd_certify, cmd_check_params, cmd_lambda_grid, cmd_run, cmd_sweep, execute, lambda_grid, precheck, sweep,
};
pub use config::{parse_config, ConfigError, RunConfig};
pub use trace_csv::{parse_trace_csv, write_trace, TRACE_HEADER};

pub const EXIT_OK: i32 = 0;
/// A check or certificate failed, or an I/O error occurred.
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_MAX_ITERS: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CliError {
    /// Bad arguments, configuration or input files.
    Usage(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}
