use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use etrk_core::cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(out) => {
            let _ = std::io::stdout().write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("etrk: {e}");
            ExitCode::FAILURE
        }
    }
}
