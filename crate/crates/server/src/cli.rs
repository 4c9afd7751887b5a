//! The `medbook` command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use medbook_core::seed::{SeedError, SeedFixture};

use crate::config::{load_config, Overrides};
use crate::server::{open_app, serve};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_FIXTURE_INVALID: u8 = 2;
pub const EXIT_ALREADY_SEEDED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "medbook", version, about = "Medical appointment booking service")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[command(flatten)]
        common: Common,
    },
    /// Load a fixture file (or a directory holding fixture.toml) into the store.
    Seed {
        fixture: PathBuf,
        /// Merge into a store that already has catalog data.
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Store directory.
    #[arg(long)]
    pub db: Option<PathBuf>,
    /// Configuration file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl Command {
    pub fn overrides(&self) -> Overrides {
        match self {
            Command::Serve { port, common } => Overrides {
                config: common.config.clone(),
                port: *port,
                db: common.db.clone(),
            },
            Command::Seed { common, .. } => Overrides {
                config: common.config.clone(),
                port: None,
                db: common.db.clone(),
            },
        }
    }
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

pub fn run(cli: Cli) -> ExitCode {
    let overrides = cli.command.overrides();
    let config = match load_config(&overrides) {
        Ok(config) => config,
        Err(err) => return fail(EXIT_FAILURE, err),
    };
    match cli.command {
        Command::Serve { .. } => {
            let runtime = match tokio::runtime::Runtime::new() {
                Ok(rt) => rt,
                Err(err) => return fail(EXIT_FAILURE, err),
            };
            runtime.block_on(async {
                let handle = match serve(&config).await {
                    Ok(handle) => handle,
                    Err(err) => return fail(EXIT_FAILURE, err),
                };
                println!("medbook listening on http://{}", handle.local_addr());
                shutdown_signal().await;
                tracing::info!("shutting down");
                match handle.shutdown().await {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(err) => fail(EXIT_FAILURE, err),
                }
            })
        }
        Command::Seed { fixture, force, .. } => {
            let fixture = match SeedFixture::load(&fixture) {
                Ok(f) => f,
                Err(err @ SeedError::FixtureInvalid { .. }) => return fail(EXIT_FIXTURE_INVALID, err),
                Err(err) => return fail(EXIT_FAILURE, err),
            };
            let app = match open_app(&config) {
                Ok(app) => app,
                Err(err) => return fail(EXIT_FAILURE, err),
            };
            match app.seed(&fixture, force) {
                Ok(summary) => {
                    println!("hospitals: {}", summary.hospitals);
                    println!("doctors: {}", summary.doctors);
                    println!("schedules: {}", summary.schedules);
                    println!("admins: {}", summary.admins);
                    ExitCode::SUCCESS
                }
                Err(err @ SeedError::FixtureInvalid { .. }) => fail(EXIT_FIXTURE_INVALID, err),
                Err(err @ SeedError::AlreadySeeded) => fail(EXIT_ALREADY_SEEDED, err),
                Err(err) => fail(EXIT_FAILURE, err),
            }
        }
    }
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        () = ctrl_c => {}
        () = term => {}
    }
}
