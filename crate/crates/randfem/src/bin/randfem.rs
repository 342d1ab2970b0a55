use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use randfem::config::{from_cli, Cli, SEED_ENV};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = from_cli(cli, std::env::var(SEED_ENV).ok()).and_then(|cfg| randfem::app::execute(&cfg));
    match result {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("randfem: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
