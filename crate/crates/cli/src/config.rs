//! `--config path.json`: a JSON object whose keys mirror the command-line
//! flags. It is expanded into arguments placed before the explicit ones,
//! so flags given on the command line win.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::Value;

/// Largest config file accepted.
pub const MAX_CONFIG_BYTES: usize = 1 << 20;

/// Unknown keys are rejected in [`RunConfig::parse`].
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct RunConfig {
    /// Subcommand; must agree with the one on the command line if both are
    /// given.
    #[serde(default)]
    pub command: Option<String>,
    #[serde(flatten)]
    pub flags: BTreeMap<String, Value>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("config is not valid JSON: {0}")]
    Json(String),
    #[error("config file exceeds {MAX_CONFIG_BYTES} bytes")]
    TooLarge,
    #[error("config key `{0}` is not a flag")]
    UnknownKey(String),
    #[error("config key `{key}` has an unsupported value: {reason}")]
    BadValue { key: String, reason: String },
    #[error("config is for `{config}` but the command line runs `{cli}`")]
    CommandMismatch { config: String, cli: String },
}

/// Flags accepted in config files, as written after `--`.
pub const KNOWN_FLAGS: &[&str] = &[
    "scheme",
    "schedule",
    "direction",
    "depth",
    "depths",
    "epsilon",
    "tol",
    "seed",
    "levels",
    "max-iter",
    "max-ell",
    "max-points",
    "polygon",
    "mask",
    "start",
    "output",
    "format",
    "svg",
    "full-dim",
    "json",
];

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        if text.len() > MAX_CONFIG_BYTES {
            return Err(ConfigError::TooLarge);
        }
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
        for key in cfg.flags.keys() {
            if !KNOWN_FLAGS.contains(&normalize(key).as_str()) {
                return Err(ConfigError::UnknownKey(key.clone()));
            }
        }
        Ok(cfg)
    }

    /// `--flag value` pairs in key order.
    pub fn to_args(&self) -> Result<Vec<String>, ConfigError> {
        let mut out = Vec::new();
        for (key, value) in &self.flags {
            let flag = format!("--{}", normalize(key));
            let bad = |reason: &str| ConfigError::BadValue {
                key: key.clone(),
                reason: reason.to_string(),
            };
            match value {
                Value::Bool(true) => out.push(flag),
                Value::Bool(false) | Value::Null => {}
                Value::Number(n) => {
                    out.push(flag);
                    out.push(n.to_string());
                }
                Value::String(s) => {
                    out.push(flag);
                    out.push(s.clone());
                }
                Value::Array(items) => {
                    let parts = items
                        .iter()
                        .map(|v| match v {
                            Value::Number(n) => Ok(n.to_string()),
                            Value::String(s) if !s.contains(',') => Ok(s.clone()),
                            _ => Err(bad("arrays may hold numbers or comma-free strings")),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    if parts.is_empty() {
                        return Err(bad("empty array"));
                    }
                    out.push(flag);
                    out.push(parts.join(","));
                }
                Value::Object(_) => {
                    // descriptors go inline as JSON text
                    out.push(flag);
                    out.push(value.to_string());
                }
            }
        }
        Ok(out)
    }

    pub fn check_command(&self, cli: &str) -> Result<(), ConfigError> {
        match &self.command {
            Some(c) if c != cli => Err(ConfigError::CommandMismatch {
                config: c.clone(),
                cli: cli.to_string(),
            }),
            _ => Ok(()),
        }
    }
}

fn normalize(key: &str) -> String {
    key.replace('_', "-")
}
