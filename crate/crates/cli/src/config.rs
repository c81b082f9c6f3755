//! Optional `key = value` parameter files.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::CliError;

pub const KEYS: [&str; 12] = [
    "k2",
    "g1",
    "g2",
    "b1",
    "b2",
    "var",
    "from",
    "to",
    "steps",
    "c1",
    "c2",
    "verify_every",
];

/// Values read from a config file; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected `key = value`", n + 1))
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key `{key}`",
                    n + 1
                )));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.get_str(key)
            .map(|v| {
                v.parse::<f64>().map_err(|_| {
                    CliError::Usage(format!("config key `{key}`: `{v}` is not a number"))
                })
            })
            .transpose()
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.get_str(key)
            .map(|v| {
                v.parse::<usize>().map_err(|_| {
                    CliError::Usage(format!("config key `{key}`: `{v}` is not a count"))
                })
            })
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let c = ConfigFile::parse("# sweep\nk2 = 0.1\n  g1=1 # trailing\n\nvar = g\n").unwrap();
        assert_eq!(c.get_f64("k2").unwrap(), Some(0.1));
        assert_eq!(c.get_f64("g1").unwrap(), Some(1.0));
        assert_eq!(c.get_str("var"), Some("g"));
        assert_eq!(c.get_f64("b1").unwrap(), None);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(ConfigFile::parse("k2 0.1").is_err());
        assert!(ConfigFile::parse("gamma = 2").is_err());
        assert!(ConfigFile::parse("k2 = x").unwrap().get_f64("k2").is_err());
    }
}
