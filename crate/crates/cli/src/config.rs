//! `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys match the long
//! flag names, with `-` and `_` interchangeable.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

pub const KEYS: [&str; 13] = [
    "sigma2", "snr_db", "c1", "c2", "scheme", "sweep", "range", "preset", "out", "seed",
    "samples", "quad_order", "tol",
];

#[derive(Debug, Default, Clone, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (number, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key = value", number + 1))?;
            let key = key.trim().replace('-', "_").to_ascii_lowercase();
            if !KEYS.contains(&key.as_str()) {
                return Err(format!("config line {}: unknown key '{key}'", number + 1));
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(ConfigFile { entries })
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        self.text(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| format!("config key '{key}': cannot parse '{v}'"))
            })
            .transpose()
    }
}
