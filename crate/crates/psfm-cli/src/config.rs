//! Flat key=value configuration files. Every flag a subcommand accepts can
//! also come from such a file; values given on the command line win.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use psfm::error::{Error, Result};

/// Parsed contents of a configuration file, or an empty stand-in when no
/// file was given.
pub struct FileConfig {
    entries: HashMap<String, String>,
}

impl FileConfig {
    pub fn empty() -> Self {
        FileConfig { entries: HashMap::new() }
    }

    /// Loads `key=value` lines; blank lines and `#` comments are skipped.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut entries = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: idx as u64 + 1,
                    message: format!("expected key=value, got {line:?}"),
                });
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { entries })
    }

    pub fn from_arg(path: &Option<PathBuf>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::empty()),
        }
    }

    /// Fills an unset option from the file, parsing the stored string.
    pub fn fill<T>(&self, slot: &mut Option<T>, key: &str) -> Result<()>
    where
        T: FromStr,
        T::Err: Display,
    {
        if slot.is_none() {
            if let Some(raw) = self.entries.get(key) {
                let parsed = raw
                    .parse()
                    .map_err(|e| Error::Config(format!("config key {key}={raw:?}: {e}")))?;
                *slot = Some(parsed);
            }
        }
        Ok(())
    }

    /// Fills an unset flag; the file value must be `true` or `false`.
    pub fn fill_flag(&self, slot: &mut bool, key: &str) -> Result<()> {
        if !*slot {
            if let Some(raw) = self.entries.get(key) {
                *slot = raw
                    .parse()
                    .map_err(|_| Error::Config(format!("config key {key}={raw:?}: expected true or false")))?;
            }
        }
        Ok(())
    }

    /// Fills an unset list option from a comma-separated file value.
    pub fn fill_list<T>(&self, slot: &mut Option<Vec<T>>, key: &str) -> Result<()>
    where
        T: FromStr,
        T::Err: Display,
    {
        if slot.is_none() {
            if let Some(raw) = self.entries.get(key) {
                let mut items = Vec::new();
                for part in raw.split(',') {
                    let parsed = part.trim().parse().map_err(|e| {
                        Error::Config(format!("config key {key}={raw:?}: {e}"))
                    })?;
                    items.push(parsed);
                }
                *slot = Some(items);
            }
        }
        Ok(())
    }
}

/// Unwraps an option that must be set by flag or file.
pub fn require<T>(slot: Option<T>, key: &str) -> Result<T> {
    slot.ok_or_else(|| Error::Config(format!("missing --{key} (flag or config file key {key})")))
}
