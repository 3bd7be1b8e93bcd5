//! Flat key/value run configuration: a config file plus command-line
//! overrides, later assignments winning.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default)]
pub struct Config {
    map: BTreeMap<String, String>,
}

impl Config {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parse a `key = value` file. `#` starts a comment, blank lines are
    /// skipped.
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut cfg = Self::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::validation(format!(
                    "{}:{}: expected key=value, got `{raw}`",
                    path.display(),
                    lineno + 1
                )));
            };
            cfg.set(key.trim(), value.trim());
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.map.insert(key.to_string(), value.to_string());
    }

    /// Apply a `key=value` override string.
    pub fn apply_override(&mut self, spec: &str) -> CliResult<()> {
        let Some((key, value)) = spec.split_once('=') else {
            return Err(CliError::validation(format!(
                "override must look like key=value, got `{spec}`"
            )));
        };
        self.set(key.trim(), value.trim());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> CliResult<&str> {
        self.get(key)
            .ok_or_else(|| CliError::validation(format!("missing required config key `{key}`")))
    }

    /// Typed accessor with a default.
    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw.parse().map_err(|_| {
                CliError::validation(format!("config key `{key}`: cannot parse `{raw}`"))
            }),
        }
    }

    /// Typed accessor for an optional key.
    pub fn get_opt<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                CliError::validation(format!("config key `{key}`: cannot parse `{raw}`"))
            }),
        }
    }

    /// Hash of the effective configuration, embedded in report metadata.
    pub fn hash(&self) -> String {
        let mut canonical = String::new();
        for (k, v) in &self.map {
            let _ = writeln!(canonical, "{k}={v}");
        }
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
