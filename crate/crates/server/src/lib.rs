//! HTTP service, configuration and command-line plumbing for medbook.

pub mod api;
pub mod cli;
pub mod config;
pub mod server;

pub use config::{load_config, Config, ConfigError, Overrides};
pub use server::{open_app, serve, serve_app, ServeError, ServerHandle};
