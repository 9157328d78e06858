use std::process::ExitCode;

use clap::Parser;
use packetcode_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("packetcode: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
