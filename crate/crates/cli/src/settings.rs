//! Optional `key=value` config file whose entries fill in flags that were
//! not given on the command line. Keys are the long flag names without
//! the leading dashes, e.g. `lr=1e-4` or `base-filters=16`.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use latnet_lbm::keyvalue::KeyValues;

use crate::failure::{CliResult, Failure};

#[derive(Debug, Clone, Default)]
pub struct Settings {
    file: KeyValues,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Settings::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::user(format!("{}: {e}", path.display())))?;
        let file = KeyValues::parse(&text).map_err(|e| Failure::user(format!("{}: {e}", path.display())))?;
        Ok(Settings { file })
    }

    /// Flag value if given, else the config file's, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T::Err: Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|e| Failure::user(format!("config key '{key}': bad value '{raw}': {e}"))),
            None => Ok(default),
        }
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| Failure::user(format!("config key '{key}': bad value '{raw}': {e}"))),
            None => Ok(None),
        }
    }
}
