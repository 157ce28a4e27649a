use std::process::ExitCode;

use clap::Parser;
use streamcpd_cli::{run, Cli};

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, matching our configuration code.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("streamcpd: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
