//! Plain-text configuration files and per-field value resolution.
//!
//! A configuration file holds `key = value` lines (`#` starts a comment,
//! blank lines are skipped), with keys named after the long command-line
//! flags they default. Every field resolves independently as
//! flag > file > default, and the resolved values are echoed into the run
//! manifest so a run can be reproduced from its metadata alone.

use crate::CliError;
use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn empty() -> Self {
        FileConfig {
            values: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::usage(format!(
                    "config {} line {}: expected key = value, got {:?}",
                    path.display(),
                    lineno + 1,
                    raw
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Resolves each field as flag > file > default and records the final
/// values for the manifest echo.
pub struct Resolver {
    file: FileConfig,
    pub resolved: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(file: FileConfig) -> Self {
        Resolver {
            file,
            resolved: BTreeMap::new(),
        }
    }

    fn parse<T>(&self, key: &str, raw: &str) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        raw.parse().map_err(|e| {
            CliError::usage(format!("config value {key} = {raw:?} is invalid: {e}"))
        })
    }

    /// Optional field: flag wins, else the file value, else `None`.
    pub fn opt<T>(&mut self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(raw) => Some(self.parse(key, raw)?),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.resolved.insert(key.to_string(), v.to_string());
        }
        Ok(value)
    }

    /// Required field: flag, else file, else a usage error naming both.
    pub fn require<T>(&mut self, flag: Option<T>, key: &str) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.opt(flag, key)?.ok_or_else(|| {
            CliError::usage(format!(
                "missing required value: pass --{key} or set {key} in the config file"
            ))
        })
    }

    /// Field with a default used when neither flag nor file provides one.
    pub fn or_default<T>(&mut self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = self.opt(flag, key)?.unwrap_or(default);
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(value)
    }
}
