use std::io::Write;
use std::process::ExitCode;

use bibcap_cli::cli::{self, Cli, Command, Output, EXIT_ENVIRONMENT};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = match &cli.command {
        Command::Serve { listen, data } => match tokio::runtime::Runtime::new() {
            Ok(runtime) => runtime.block_on(cli::serve(&cli, *listen, data)),
            Err(e) => Output {
                stderr: format!("error: {e}\n"),
                code: EXIT_ENVIRONMENT,
                ..Output::default()
            },
        },
        _ => cli::run(&cli),
    };
    let _ = std::io::stdout().write_all(output.stdout.as_bytes());
    let _ = std::io::stderr().write_all(output.stderr.as_bytes());
    ExitCode::from(output.code)
}
