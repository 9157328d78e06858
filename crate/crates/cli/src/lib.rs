//! Experiment runner for the `packetcode` library: network description
//! files, the `capacity`, `simulate`, `sweep`, `exponent` and `fluidcheck`
//! commands, and their CSV output.
//!
//! Exit statuses: 0 success, 1 I/O failure, 2 configuration error, 3 size
//! guard refusal, 4 exponent fit impossible (the table is still written).

pub mod args;
pub mod commands;
pub mod config;
pub mod fixtures;
pub mod table;

use std::path::Path;

pub use args::{Cli, Command};
pub use commands::{run, Report};
pub use config::{parse_network, parse_network_str};
pub use table::{ResultsTable, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("refused: {0}")]
    Guard(String),
    #[error("no fit: {0}")]
    NoFit(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Guard(_) => 3,
            CliError::NoFit(_) => 4,
        }
    }
}

impl From<packetcode::Error> for CliError {
    fn from(e: packetcode::Error) -> Self {
        match e {
            packetcode::Error::Guard(msg) => CliError::Guard(msg),
            packetcode::Error::NoFit(msg) => CliError::NoFit(msg),
            other => CliError::Config(other.to_string()),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Runs a command and writes its output files. Returns the exit status:
/// 0, or 4 when the exponent fit failed.
pub fn execute(command: &Command) -> Result<u8, CliError> {
    if let Command::Fixture(a) = command {
        let json = fixtures::generate(a)?;
        write_file(&a.out, &json)?;
        return Ok(0);
    }
    let out = match command {
        Command::Capacity(a) => &a.common.out,
        Command::Simulate(a) => &a.common.out,
        Command::Sweep(a) => &a.common.out,
        Command::Exponent(a) => &a.common.out,
        Command::Fluidcheck(a) => &a.common.out,
        Command::Fixture(_) => unreachable!("handled above"),
    };
    let report = run(command)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    write_file(out, &report.table.to_csv())?;
    for (path, contents) in &report.extra {
        write_file(path, contents)?;
    }
    match &report.no_fit {
        Some(msg) => {
            eprintln!("no fit: {msg}");
            Ok(4)
        }
        None => Ok(0),
    }
}
