//! Atomic artifact writes with a provenance sidecar.
//!
//! Every output file is written through a temp file and a rename, then gets
//! a `<name>.meta.json` sidecar recording the tool version, the hash of the
//! effective configuration, and content hashes of the inputs — enough to
//! reproduce or audit any artifact.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::Digest;

pub fn sha256_hex(bytes: &[u8]) -> String {
    sha2::Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Write `content` to `path` atomically (temp file + rename).
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&parent)
        .with_context(|| format!("creating {}", parent.display()))?;
    let tmp = tempfile::NamedTempFile::new_in(&parent)
        .with_context(|| format!("temp file in {}", parent.display()))?;
    std::fs::write(tmp.path(), content).context("writing temp file")?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Provenance accumulated over one subcommand run.
#[derive(Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub effective_config: serde_json::Value,
    pub input_hashes: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(command: &str, effective_config: serde_json::Value) -> Self {
        let canonical = serde_json::to_vec(&effective_config).expect("config serializes");
        Self {
            tool: "drift",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_hash: sha256_hex(&canonical),
            effective_config,
            input_hashes: BTreeMap::new(),
        }
    }

    /// Record an input file's content hash. Missing files are recorded as
    /// such rather than failing: provenance must not mask the real error.
    pub fn record_input(&mut self, path: &Path) {
        let value = match std::fs::read(path) {
            Ok(bytes) => sha256_hex(&bytes),
            Err(_) => "<unreadable>".to_string(),
        };
        self.input_hashes
            .insert(path.display().to_string(), value);
    }

    /// Write the artifact and its `<name>.meta.json` sidecar.
    pub fn write_artifact(&self, path: &Path, content: &str) -> Result<()> {
        write_atomic(path, content)?;
        let sidecar = path.with_file_name(format!(
            "{}.meta.json",
            path.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "artifact".to_string())
        ));
        let mut meta = serde_json::to_string_pretty(self).expect("provenance serializes");
        meta.push('\n');
        write_atomic(&sidecar, &meta)?;
        Ok(())
    }
}
