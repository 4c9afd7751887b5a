use std::process::ExitCode;

use clap::Parser;
use medbook_server::cli::{run, Cli, Command};
use tracing_subscriber::EnvFilter;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let filter = EnvFilter::try_from_env("MEDBOOK_LOG").unwrap_or_else(|_| EnvFilter::new("info"));
    let logs = tracing_subscriber::fmt().json().with_env_filter(filter).with_current_span(true);
    // The seed command prints its counts on stdout, so its logs go to stderr.
    match cli.command {
        Command::Serve { .. } => logs.with_writer(std::io::stdout).init(),
        Command::Seed { .. } => logs.with_writer(std::io::stderr).init(),
    }
    run(cli)
}
