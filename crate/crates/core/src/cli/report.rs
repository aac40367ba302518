//! Run reports: ordered `key = value` lines, one per entry.

use std::fmt::Display;

use crate::cli::config::RunConfig;
use crate::error::{Error, Result};

/// Prefix under which a report embeds its resolved configuration.
pub const CONFIG_PREFIX: &str = "config.";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub entries: Vec<(String, String)>,
}

impl Report {
    pub fn push(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn embed_config(&mut self, cfg: &RunConfig) {
        for key in crate::cli::config::KEYS {
            self.push(format!("{CONFIG_PREFIX}{key}"), cfg.get(key).unwrap_or_default());
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    /// Inverse of [`Report::render`]. Blank lines and `#` comments are
    /// skipped; keys must be non-empty, free of whitespace and unique.
    pub fn parse(text: &str) -> Result<Self> {
        let mut report = Report::default();
        let mut seen = std::collections::BTreeSet::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!("report line {}: missing '='", n + 1)));
            };
            let k = k.trim();
            if k.is_empty() || k.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!("report line {}: bad key {k:?}", n + 1)));
            }
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("report line {}: repeated key {k:?}", n + 1)));
            }
            report.push(k, v.trim());
        }
        Ok(report)
    }

    /// Configuration embedded by [`Report::embed_config`].
    pub fn config(&self) -> Result<RunConfig> {
        RunConfig::from_pairs(self.entries.iter().filter_map(|(k, v)| {
            k.strip_prefix(CONFIG_PREFIX)
                .map(|key| (key.to_string(), v.as_str()))
        }))
    }
}
