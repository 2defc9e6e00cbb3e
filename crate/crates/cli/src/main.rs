use std::process::ExitCode;

use clap::Parser;
use hbac_cli::{execute, write_output, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    for w in &outcome.run.warnings {
        eprintln!("warning: {w}");
    }
    if let Err(e) = write_output(&outcome) {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    for f in &outcome.run.failures {
        eprintln!("invariant failure: {f}");
    }
    ExitCode::from(outcome.exit_code() as u8)
}
