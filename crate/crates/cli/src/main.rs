use std::process::ExitCode;

use clap::Parser;

use plurality_cli::{exit_code, run, Cli, Outcome, EXIT_VALIDATION};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::ValidationFailed) => {
            eprintln!("error: validation failed");
            ExitCode::from(EXIT_VALIDATION as u8)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
