//! Optional TOML configuration shared by the CLI and the service.
//!
//! Looked up at `--config PATH`, then `$MOVA_CONFIG`, then
//! `$XDG_CONFIG_HOME/mova/config.toml` (or `~/.config/mova/config.toml`).
//! `MOVA_ENDPOINT` overrides the endpoint template from any source.
//!
//! ```toml
//! endpoint = "https://stooq.com/q/d/l/?s={symbol}&i=d"
//! ttl_secs = 900
//! timeout_secs = 10
//! max_retries = 2
//! backoff_ms = 500
//! port = 8777
//! bind = "127.0.0.1"
//! default_period = 20
//! ```

use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::model::Period;
use crate::remote::{self, RemoteEndpointConfig, RemoteError};
use crate::service::ServiceConfig;

pub const ENDPOINT_ENV: &str = "MOVA_ENDPOINT";
pub const CONFIG_ENV: &str = "MOVA_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Endpoint(#[from] RemoteError),
    #[error("default_period must be a positive integer")]
    Period,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub endpoint: Option<String>,
    pub ttl_secs: Option<f64>,
    pub timeout_secs: Option<f64>,
    pub max_retries: Option<u32>,
    pub backoff_ms: Option<u64>,
    pub port: Option<u16>,
    pub bind: Option<IpAddr>,
    pub default_period: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct AppConfig {
    pub endpoint: RemoteEndpointConfig,
    pub ttl: Duration,
    pub service: ServiceConfig,
}

impl AppConfig {
    pub fn from_file_config(file: FileConfig, endpoint_override: Option<String>) -> Result<Self, ConfigError> {
        let template = endpoint_override
            .or(file.endpoint)
            .unwrap_or_else(|| remote::STOOQ_DAILY_TEMPLATE.to_string());
        let mut endpoint = RemoteEndpointConfig::new(template)?;
        if let Some(t) = file.timeout_secs {
            endpoint.timeout = Duration::from_secs_f64(t.max(0.0));
        }
        if let Some(r) = file.max_retries {
            endpoint.max_retries = r;
        }
        if let Some(b) = file.backoff_ms {
            endpoint.backoff = Duration::from_millis(b);
        }

        let mut service = ServiceConfig::default();
        if let Some(p) = file.port {
            service.port = p;
        }
        if let Some(b) = file.bind {
            service.bind = b;
        }
        if let Some(p) = file.default_period {
            service.default_period = Period::new(p).map_err(|_| ConfigError::Period)?;
        }

        Ok(AppConfig {
            endpoint,
            ttl: file
                .ttl_secs
                .map_or(remote::DEFAULT_TTL, |s| Duration::from_secs_f64(s.max(0.0))),
            service,
        })
    }

    /// Resolves the config file (if any) and applies environment overrides.
    pub fn load(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        let path = explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
        let file = match path {
            Some(p) => read_file(&p)?,
            None => match default_path().filter(|p| p.is_file()) {
                Some(p) => read_file(&p)?,
                None => FileConfig::default(),
            },
        };
        let endpoint = std::env::var(ENDPOINT_ENV).ok().filter(|s| !s.is_empty());
        AppConfig::from_file_config(file, endpoint)
    }
}

fn read_file(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn default_path() -> Option<PathBuf> {
    let base = std::env::var_os("XDG_CONFIG_HOME")
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".config")))?;
    Some(base.join("mova").join("config.toml"))
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            endpoint: RemoteEndpointConfig::default(),
            ttl: remote::DEFAULT_TTL,
            service: ServiceConfig::default(),
        }
    }
}
