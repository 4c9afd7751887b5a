//! Server configuration.
//!
//! Values are layered, later layers winning: built-in defaults, an optional
//! TOML file, `MEDBOOK_*` environment variables, command-line flags. Nested
//! keys use a double underscore in the environment, e.g.
//! `MEDBOOK_ABOUT__OBJECTIVES` or `MEDBOOK_ADMIN__PASSWORD`; lists are
//! written as `MEDBOOK_CORS_ORIGINS='["https://a.example"]'`.
//!
//! The file is taken from `--config` or `MEDBOOK_CONFIG`; without either,
//! no file is read.

use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::num::NonZeroU32;
use std::path::PathBuf;

use axum::http::HeaderValue;
use figment::providers::{Env, Format, Serialized, Toml};
use figment::Figment;
use medbook_core::{About, HashCost, Settings};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ENV_PREFIX: &str = "MEDBOOK_";

/// Bootstrap credentials for the first admin account. Only used while the
/// store holds no admin.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdminBootstrap {
    pub username: String,
    pub password: String,
}

pub const DEFAULT_ADMIN_PASSWORD: &str = "change-me-please";

impl Default for AdminBootstrap {
    fn default() -> Self {
        Self {
            username: "admin".into(),
            password: DEFAULT_ADMIN_PASSWORD.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub host: IpAddr,
    pub port: u16,
    /// Directory of the file-backed store; created if missing.
    pub db: PathBuf,
    pub slot_minutes: u32,
    pub booking_horizon_days: u32,
    pub session_ttl_hours: u32,
    pub daily_cap: Option<u32>,
    /// Browser origins allowed to call the API.
    pub cors_origins: Vec<String>,
    pub about: About,
    pub admin: AdminBootstrap,
    pub hash: HashCost,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            db: PathBuf::from("./data"),
            slot_minutes: 30,
            booking_horizon_days: 90,
            session_ttl_hours: 24,
            daily_cap: None,
            cors_origins: vec!["http://localhost:5173".into()],
            about: About {
                objectives: "Find a hospital, pick a doctor and book a free time slot \
                             without queuing at the reception desk."
                    .into(),
                developers: vec!["The medbook maintainers".into()],
            },
            admin: AdminBootstrap::default(),
            hash: HashCost::default(),
        }
    }
}

/// Values given on the command line.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Overrides {
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub port: Option<u16>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub db: Option<PathBuf>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid configuration: {field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<figment::Error> for ConfigError {
    fn from(err: figment::Error) -> Self {
        let field = if err.path.is_empty() {
            "<root>".to_owned()
        } else {
            err.path.join(".")
        };
        let mut message = err.kind.to_string();
        if let Some(meta) = &err.metadata {
            message.push_str(&format!(" (from {})", meta.name));
        }
        ConfigError::new(field, message)
    }
}

/// The layered provider for the given flags and the process environment.
pub fn figment(overrides: &Overrides) -> Figment {
    let env = Env::prefixed(ENV_PREFIX).split("__").ignore(&["config", "log"]);
    let mut figment = Figment::from(Serialized::defaults(Config::default()));
    if let Some(path) = config_path(overrides) {
        figment = figment.merge(Toml::file_exact(path));
    }
    figment.merge(env).merge(Serialized::defaults(overrides))
}

fn config_path(overrides: &Overrides) -> Option<PathBuf> {
    overrides
        .config
        .clone()
        .or_else(|| std::env::var_os(format!("{ENV_PREFIX}CONFIG")).map(PathBuf::from))
}

/// Resolves and validates the configuration.
pub fn load_config(overrides: &Overrides) -> Result<Config, ConfigError> {
    if let Some(path) = config_path(overrides) {
        if !path.is_file() {
            return Err(ConfigError::new("config", format!("file not found: {}", path.display())));
        }
    }
    let config: Config = figment(overrides).extract()?;
    config.validate()?;
    Ok(config)
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.slot_minutes == 0 || self.slot_minutes > 24 * 60 {
            return Err(ConfigError::new("slot_minutes", "must be between 1 and 1440"));
        }
        if self.session_ttl_hours == 0 {
            return Err(ConfigError::new("session_ttl_hours", "must be at least 1"));
        }
        if self.daily_cap == Some(0) {
            return Err(ConfigError::new("daily_cap", "must be at least 1 when set"));
        }
        for (i, origin) in self.cors_origins.iter().enumerate() {
            let well_formed = (origin.starts_with("http://") || origin.starts_with("https://"))
                && HeaderValue::from_str(origin).is_ok();
            if !well_formed {
                return Err(ConfigError::new(
                    format!("cors_origins[{i}]"),
                    format!("{origin:?} is not an http(s) origin"),
                ));
            }
        }
        if self.admin.username.trim().is_empty() {
            return Err(ConfigError::new("admin.username", "must not be empty"));
        }
        if self.admin.password.chars().count() < medbook_core::validation::MIN_PASSWORD_CHARS {
            return Err(ConfigError::new(
                "admin.password",
                format!("must be at least {} characters", medbook_core::validation::MIN_PASSWORD_CHARS),
            ));
        }
        self.hash.validate().map_err(|e| ConfigError::new("hash", e))?;
        Ok(())
    }

    pub fn socket_addr(&self) -> SocketAddr {
        SocketAddr::new(self.host, self.port)
    }

    pub fn settings(&self) -> Settings {
        Settings {
            slot_minutes: NonZeroU32::new(self.slot_minutes).unwrap_or(NonZeroU32::MIN),
            booking_horizon_days: self.booking_horizon_days,
            session_ttl: chrono::Duration::hours(i64::from(self.session_ttl_hours)),
            daily_cap: self.daily_cap,
            hash_cost: self.hash,
            about: self.about.clone(),
        }
    }
}
