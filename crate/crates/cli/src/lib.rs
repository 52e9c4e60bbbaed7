//! Command-line front end for HARE scoring.
//!
//! [`run`] parses arguments, executes one command and returns the process
//! exit code: 0 on success, 1 for bad input data, 2 for a bad configuration
//! and 3 for internal failures.

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub mod args;
mod commands;
pub mod config;
mod pipeline;

pub use args::{Cli, Command};
pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => 1,
            CliError::Config(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<hare_core::corpus::CorpusError> for CliError {
    fn from(e: hare_core::corpus::CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<hare_core::extract::GazetteerError> for CliError {
    fn from(e: hare_core::extract::GazetteerError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<hare_core::embed::EmbedError> for CliError {
    fn from(e: hare_core::embed::EmbedError) -> Self {
        match e {
            hare_core::embed::EmbedError::Config(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<hare_core::score::ScoreError> for CliError {
    fn from(e: hare_core::score::ScoreError) -> Self {
        match e {
            hare_core::score::ScoreError::Config(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<hare_core::stats::StatsError> for CliError {
    fn from(e: hare_core::stats::StatsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

/// Runs the command line `args` (program name first), writing results to
/// `stdout` and diagnostics to `stderr`. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return e.exit_code();
        }
    };
    match commands::execute(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "hare: {e}");
            e.exit_code()
        }
    }
}
