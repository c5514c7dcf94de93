//! `key=value` text blocks used for metadata and config files.
//!
//! One entry per line, `#` starts a comment line, blank lines are ignored,
//! and whitespace around keys and values is trimmed. Keys keep their file
//! order.

use std::fmt::Display;
use std::str::FromStr;

use crate::error::{LbmError, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::new();
        let mut offset = 0;
        for line in text.split_inclusive('\n') {
            let trimmed = line.trim();
            if !trimmed.is_empty() && !trimmed.starts_with('#') {
                let (k, v) = trimmed.split_once('=').ok_or_else(|| LbmError::Format {
                    offset,
                    message: format!("expected key=value, found '{trimmed}'"),
                })?;
                kv.entries.push((k.trim().to_string(), v.trim().to_string()));
            }
            offset += line.len();
        }
        Ok(kv)
    }

    pub fn push(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        let raw = self.get(key).ok_or_else(|| LbmError::Format {
            offset: 0,
            message: format!("missing key '{key}'"),
        })?;
        raw.parse().map_err(|e| LbmError::Format {
            offset: 0,
            message: format!("bad value '{raw}' for '{key}': {e}"),
        })
    }

    pub fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(_) => self.require(key).map(Some),
        }
    }

    /// Checks a `format_version` entry against `expected`.
    pub fn check_version(&self, expected: u32) -> Result<()> {
        let found: u32 = self.require("format_version")?;
        if found != expected {
            return Err(LbmError::Version { found, expected });
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            s.push_str(k);
            s.push('=');
            s.push_str(v);
            s.push('\n');
        }
        s
    }
}
