//! Flat `key=value` configuration files. Values given on the command line
//! win over the file, and the file wins over built-in defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::Context;

pub const KEYS: &[&str] = &[
    "smoothing_radius",
    "smoothing_threshold",
    "agreement_votes",
    "sil_threshold",
    "steps",
    "batch_size",
    "learning_rate",
    "width",
    "convs",
    "lambda_tv",
    "range_r",
    "samples",
    "threshold_sq",
    "seed",
    "reshuffle",
];

/// A configuration problem, reported with exit code 1.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key=value", n + 1)))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(ConfigError(format!("line {}: unknown key {k:?}", n + 1)));
            }
            if values.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(ConfigError(format!("line {}: duplicate key {k:?}", n + 1)));
            }
        }
        Ok(Config { values })
    }

    pub fn load(path: Option<&Path>) -> anyhow::Result<Config> {
        match path {
            None => Ok(Config::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                Ok(Config::parse(&text)?)
            }
        }
    }

    /// The flag value if given, else the file value, else `default`.
    pub fn resolve<T>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, ConfigError>
    where
        T: FromStr,
        T::Err: Display,
    {
        debug_assert!(KEYS.contains(&key));
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|e| ConfigError(format!("config key {key}: {e}"))),
        }
    }

    /// Like [`Config::resolve`] without a default.
    pub fn resolve_opt<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, ConfigError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|s| s.parse().map_err(|e| ConfigError(format!("config key {key}: {e}"))))
            .transpose()
    }
}
