//! Key=value configuration file support. Explicit flags always win; the
//! file only fills in values the command line left unset.

use std::path::Path;

use anyhow::{Context, Result};

#[derive(Debug, Default)]
pub struct FileConfig {
    table: toml::Table,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let table: toml::Table = text
            .parse()
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(Self { table })
    }

    pub fn usize_or(&self, flag: Option<usize>, key: &str, default: usize) -> usize {
        flag.or_else(|| {
            self.table
                .get(key)
                .and_then(|v| v.as_integer())
                .and_then(|v| usize::try_from(v).ok())
        })
        .unwrap_or(default)
    }

    pub fn u64_or(&self, flag: Option<u64>, key: &str, default: u64) -> u64 {
        flag.or_else(|| {
            self.table
                .get(key)
                .and_then(|v| v.as_integer())
                .and_then(|v| u64::try_from(v).ok())
        })
        .unwrap_or(default)
    }

    pub fn f64_or(&self, flag: Option<f64>, key: &str, default: f64) -> f64 {
        flag.or_else(|| self.table.get(key).and_then(|v| v.as_float()))
            .unwrap_or(default)
    }

    pub fn string_or(&self, flag: Option<String>, key: &str, default: &str) -> String {
        flag.or_else(|| {
            self.table
                .get(key)
                .and_then(|v| v.as_str())
                .map(str::to_string)
        })
        .unwrap_or_else(|| default.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("drift.toml");
        std::fs::write(&path, "workers = 9\nseed = 11\n").unwrap();
        let cfg = FileConfig::load(Some(&path)).unwrap();
        assert_eq!(cfg.usize_or(Some(2), "workers", 4), 2);
        assert_eq!(cfg.usize_or(None, "workers", 4), 9);
        assert_eq!(cfg.u64_or(None, "seed", 0), 11);
        assert_eq!(cfg.usize_or(None, "missing", 4), 4);
    }

    #[test]
    fn absent_file_is_all_defaults() {
        let cfg = FileConfig::load(None).unwrap();
        assert_eq!(cfg.usize_or(None, "workers", 4), 4);
        assert_eq!(cfg.string_or(None, "backend", "heuristic"), "heuristic");
    }
}
