//! Shared loading helpers for the pipeline's file formats.

use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use drift_core::alias::{NormalizedPath, SnapshotIndex};
use drift_core::summary::{count_sentences, DeltaSummary, SummaryBackendKind};
use drift_core::window::ChangeManifest;

pub fn load_bundle(path: &Path) -> Result<ChangeManifest> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading bundle {}", path.display()))?;
    ChangeManifest::from_json(&text)
        .with_context(|| format!("parsing bundle {}", path.display()))
}

/// A snapshot argument is either a newline-delimited listing file or a
/// checked-out tree directory.
pub fn load_snapshot(path: &Path) -> Result<SnapshotIndex> {
    let meta = std::fs::metadata(path)
        .with_context(|| format!("reading snapshot {}", path.display()))?;
    if meta.is_dir() {
        SnapshotIndex::from_tree(path)
            .with_context(|| format!("walking snapshot tree {}", path.display()))
    } else {
        SnapshotIndex::from_listing_file(path)
            .with_context(|| format!("reading snapshot listing {}", path.display()))
    }
}

/// One gold evaluation item.
#[derive(Debug, Clone, Deserialize)]
pub struct GoldItem {
    pub id: String,
    #[serde(default)]
    #[allow(dead_code)]
    pub question: String,
    pub gold_paths: BTreeSet<NormalizedPath>,
}

pub fn load_gold(path: &Path) -> Result<Vec<GoldItem>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut items = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item: GoldItem = serde_json::from_str(line)
            .with_context(|| format!("{}:{}", path.display(), idx + 1))?;
        if item.gold_paths.is_empty() {
            bail!("{}:{}: empty gold_paths", path.display(), idx + 1);
        }
        items.push(item);
    }
    Ok(items)
}

#[derive(Debug, Clone, Deserialize)]
struct QuestionRecord {
    id: String,
    question: String,
}

/// Load `{"id","question"}` records; gold files qualify too.
pub fn load_questions(path: &Path) -> Result<Vec<(String, String)>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut items = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: QuestionRecord = serde_json::from_str(line)
            .with_context(|| format!("{}:{}", path.display(), idx + 1))?;
        items.push((record.id, record.question));
    }
    Ok(items)
}

/// Rebuild delta summaries from the bundle's `changes[].summary` texts.
/// Entries without a summary are skipped; the caller decides whether that is
/// an error.
pub fn summaries_from_bundle(manifest: &ChangeManifest) -> Vec<DeltaSummary> {
    manifest
        .changes
        .iter()
        .filter_map(|entry| {
            let text = entry.summary.clone()?;
            Some(DeltaSummary {
                path: entry.display_path().clone(),
                status: entry.status_code(),
                sentence_count: count_sentences(&text),
                formatting_only: text.to_lowercase().contains("no functional change"),
                text,
                backend: SummaryBackendKind::Heuristic,
                old_path: entry.old_path().cloned(),
            })
        })
        .collect()
}
