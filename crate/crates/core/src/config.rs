//! Flat `key = value` configuration files.
//!
//! One entry per line, `#` starts a comment, values are in SI units. Keys
//! are matched exactly; unknown keys are reported so typos do not pass
//! silently.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            if entries
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(Error::Config(format!(
                    "line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
        }
        Ok(KeyValues { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`"))),
        }
    }

    /// Overwrites `slot` when `key` is present.
    pub fn read_into<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<()> {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }

    /// Fails on any key outside `known`.
    pub fn check_known(&self, known: &[&str]) -> Result<()> {
        match self.entries.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(Error::Config(format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let kv = KeyValues::parse("# radar\n carrier_frequency = 25e9 # Hz\n\nbandwidth=2e9\n").unwrap();
        assert_eq!(kv.get::<f64>("carrier_frequency").unwrap(), Some(25e9));
        assert_eq!(kv.get::<f64>("bandwidth").unwrap(), Some(2e9));
        assert_eq!(kv.get::<f64>("missing").unwrap(), None);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(KeyValues::parse("oops"), Err(Error::Config(_))));
        assert!(matches!(KeyValues::parse("a = 1\na = 2"), Err(Error::Config(_))));
        let kv = KeyValues::parse("a = x").unwrap();
        assert!(kv.get::<f64>("a").is_err());
        assert!(kv.check_known(&["b"]).is_err());
    }
}
