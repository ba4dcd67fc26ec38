//! Flat `key = value` configuration with `#` comments. Keys mirror the CLI
//! flag names (`theta-lo`, `eps-list`, ...); later sources override earlier
//! ones.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Keys that select how a run executes but never change its results.
pub const EXECUTION_KEYS: &[&str] = &["config", "out", "threads"];

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = Self::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected `key = value`, got `{}`",
                    lineno + 1,
                    raw.trim()
                ))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            map.set(key, value.trim());
        }
        Ok(map)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(normalize(key), value.into());
    }

    pub fn set_default(&mut self, key: &str, value: impl Into<String>) {
        self.entries.entry(normalize(key)).or_insert_with(|| value.into());
    }

    /// Entries of `other` replace entries of `self`.
    pub fn merge(&mut self, other: &ConfigMap) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(&normalize(key)).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(&normalize(key))
    }

    pub fn require_str(&self, key: &str) -> Result<&str> {
        self.get_str(key)
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get_str(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Config(format!("key `{key}`: cannot parse `{v}`")))
            })
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    /// Comma-separated list of numbers.
    pub fn require_list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.require_str(key)?;
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Config(format!("key `{key}`: cannot parse `{s}`")))
            })
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// The entries that determine results, i.e. everything except
    /// [`EXECUTION_KEYS`].
    pub fn provenance(&self) -> ConfigMap {
        let entries = self
            .entries
            .iter()
            .filter(|(k, _)| !EXECUTION_KEYS.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        ConfigMap { entries }
    }

    /// `# key = value` lines for the top of an output file.
    pub fn comment_header(&self) -> String {
        self.iter().map(|(k, v)| format!("# {k} = {v}\n")).collect()
    }

    pub fn as_btree(&self) -> &BTreeMap<String, String> {
        &self.entries
    }
}

impl fmt::Display for ConfigMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.iter() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// Keys are stored with `-` separators; `theta_lo` is accepted too.
fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}
