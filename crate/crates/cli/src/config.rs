//! Plain-text `key=value` configuration files and flag/file/default
//! resolution. Precedence: command-line flag, then file value, then the
//! built-in default. Keys a subcommand does not understand are rejected.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Parses `key=value` lines; `#` starts a comment, blank lines are skipped.
pub fn load(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::usage(format!(
                "{}:{}: expected key=value, got `{raw}`",
                path.display(),
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::usage(format!(
                "{}:{}: duplicate key `{key}`",
                path.display(),
                lineno + 1
            )));
        }
    }
    Ok(map)
}

/// Merges flags, file values and defaults, tracking which file keys were
/// consumed so leftovers can be rejected.
pub struct Resolver {
    file: BTreeMap<String, String>,
    consumed: BTreeSet<String>,
}

impl Resolver {
    pub fn new(file: BTreeMap<String, String>) -> Self {
        Resolver {
            file,
            consumed: BTreeSet::new(),
        }
    }

    fn file_value<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.consumed.insert(key.to_string());
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                CliError::usage(format!("config key `{key}`: cannot parse `{raw}`: {e}"))
            }),
        }
    }

    /// Flag beats file beats default.
    pub fn get<T: FromStr>(
        &mut self,
        flag: Option<T>,
        key: &str,
        default: Option<T>,
    ) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        if let Some(v) = flag {
            self.consumed.insert(key.to_string());
            return Ok(v);
        }
        if let Some(v) = self.file_value(key)? {
            return Ok(v);
        }
        default.ok_or_else(|| {
            CliError::usage(format!(
                "missing required parameter `{key}` (flag --{} or config key)",
                key.replace('_', "-")
            ))
        })
    }


    /// Errors on config keys the subcommand never looked at.
    pub fn finish(&self) -> Result<(), CliError> {
        let unknown: Vec<&String> = self
            .file
            .keys()
            .filter(|k| !self.consumed.contains(*k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::usage(format!(
                "unknown config key(s) for this subcommand: {}",
                unknown
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        }
    }
}
