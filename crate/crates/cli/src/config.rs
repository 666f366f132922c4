//! Flag values merged from the command line, the config file and defaults.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;

use crate::error::CliError;

/// Config-file lookup for one subcommand. Keys use the flag spelling
/// (`batch-size`); a key in the subcommand's section shadows a top-level one.
pub struct Settings {
    table: toml::Table,
    section: &'static str,
}

impl Settings {
    pub fn load(path: Option<&Path>, section: &'static str) -> Result<Self, CliError> {
        let table = match path {
            None => toml::Table::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| litcal_core::Error::io(p, e))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::validation(format!("config {}: {}", p.display(), e.message())))?
            }
        };
        Ok(Self { table, section })
    }

    fn lookup(&self, key: &str) -> Option<&toml::Value> {
        self.table
            .get(self.section)
            .and_then(|s| s.as_table())
            .and_then(|s| s.get(key))
            .or_else(|| self.table.get(key).filter(|v| !v.is_table()))
    }

    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.lookup(key) {
            None => Ok(None),
            Some(v) => v
                .clone()
                .try_into()
                .map(Some)
                .map_err(|e| CliError::validation(format!("config key `{key}`: {}", e.message()))),
        }
    }

    /// Command-line value, else config value, else `default`.
    pub fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.optional(flag, key)?.unwrap_or(default))
    }

    pub fn optional<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    pub fn require<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<T, CliError> {
        self.optional(flag, key)?
            .ok_or_else(|| CliError::usage(format!("--{key} is required (flag or config key `{key}`)")))
    }

    pub fn path(&self, flag: Option<PathBuf>, key: &str) -> Result<PathBuf, CliError> {
        self.require(flag, key)
    }
}
