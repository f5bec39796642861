//! Path normalization and the alias-map algebra.
//!
//! An alias map records, for one commit window X→Y, where every vanished
//! X-side path went: either to its Y-side location (rename/move) or to the
//! `__DELETED__` sentinel. Maps compose across chained windows and resolve
//! historical paths to their current identity or deletion.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Sentinel string marking a deleted path in serialized alias maps.
pub const DELETED_SENTINEL: &str = "__DELETED__";

#[derive(Debug, Error)]
pub enum AliasError {
    #[error("old path {old} maps to both {first} and {second}")]
    ConflictingTargets {
        old: String,
        first: String,
        second: String,
    },
    #[error("alias entry maps {0} to itself")]
    SelfAlias(String),
    #[error("alias entries form a cycle through {0}")]
    Cycle(String),
    #[error("invalid path in alias map: {0:?}")]
    InvalidPath(String),
}

/// A repository-root-relative path: forward slashes only, no leading `/` or
/// `./`, no `..` segments, no trailing slash, nonempty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct NormalizedPath(String);

impl NormalizedPath {
    /// Normalize a raw path string. Backslashes become `/`, repeated slashes
    /// collapse, leading `./` and `/` are stripped, `.` segments are dropped.
    /// Returns `None` when nothing valid remains (empty result) or when any
    /// `..` segment appears — parent escapes are forbidden by the output
    /// contract.
    pub fn parse(raw: &str) -> Option<Self> {
        let cleaned = raw.replace('\\', "/");
        let mut segments = Vec::new();
        for seg in cleaned.split('/') {
            match seg {
                "" | "." => continue,
                ".." => return None,
                s => segments.push(s),
            }
        }
        if segments.is_empty() {
            return None;
        }
        Some(Self(segments.join("/")))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Final path segment: `app.py` for `src/flask/app.py`.
    pub fn basename(&self) -> &str {
        self.0.rsplit('/').next().unwrap_or(&self.0)
    }
}

impl fmt::Display for NormalizedPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for NormalizedPath {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        NormalizedPath::parse(&raw)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid path {raw:?}")))
    }
}

/// Where an alias entry points: a current path or the deletion sentinel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AliasTarget {
    Moved(NormalizedPath),
    Deleted,
}

/// Outcome of resolving a path against an alias map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    /// Not in the map: the path is assumed to already be target-side.
    Kept(NormalizedPath),
    /// Renamed or moved: carries the target-side path.
    Renamed(NormalizedPath),
    Deleted,
}

/// Mapping from vanished old paths to their current identity or deletion.
///
/// Invariants held after [`AliasMap::build`] and [`AliasMap::compose`]:
/// no key maps to itself, and no `Moved` target is itself a key (chains are
/// collapsed).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasMap {
    entries: BTreeMap<NormalizedPath, AliasTarget>,
}

impl AliasMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build a map from `(old, target)` pairs, collapsing chains to a
    /// fixpoint with deletion dominating. Duplicate identical pairs are
    /// tolerated; the same old path pointing at two different targets is an
    /// ambiguous structural history and rejected, as are cycles.
    pub fn build(
        pairs: impl IntoIterator<Item = (NormalizedPath, AliasTarget)>,
    ) -> Result<Self, AliasError> {
        let mut raw: BTreeMap<NormalizedPath, AliasTarget> = BTreeMap::new();
        for (old, target) in pairs {
            if let AliasTarget::Moved(new) = &target {
                if *new == old {
                    return Err(AliasError::SelfAlias(old.to_string()));
                }
            }
            if let Some(existing) = raw.get(&old) {
                if *existing != target {
                    return Err(AliasError::ConflictingTargets {
                        old: old.to_string(),
                        first: target_str(existing),
                        second: target_str(&target),
                    });
                }
            } else {
                raw.insert(old, target);
            }
        }

        // Collapse rename chains: follow targets until they leave the domain
        // or hit a deletion.
        let mut entries = BTreeMap::new();
        for (old, target) in &raw {
            let mut seen = BTreeSet::new();
            seen.insert(old.clone());
            let mut current = target.clone();
            loop {
                match &current {
                    AliasTarget::Deleted => break,
                    AliasTarget::Moved(p) => match raw.get(p) {
                        None => break,
                        Some(next) => {
                            if !seen.insert(p.clone()) {
                                return Err(AliasError::Cycle(old.to_string()));
                            }
                            current = next.clone();
                        }
                    },
                }
            }
            if let AliasTarget::Moved(p) = &current {
                if p == old {
                    return Err(AliasError::Cycle(old.to_string()));
                }
            }
            entries.insert(old.clone(), current);
        }
        Ok(Self { entries })
    }

    /// Resolve one path: `Kept` when the map does not mention it.
    pub fn resolve(&self, path: &NormalizedPath) -> Resolution {
        match self.entries.get(path) {
            None => Resolution::Kept(path.clone()),
            Some(AliasTarget::Deleted) => Resolution::Deleted,
            Some(AliasTarget::Moved(p)) => Resolution::Renamed(p.clone()),
        }
    }

    /// Compose this map (window X→Y) with a later one (Y→Z) into the X→Z
    /// map. Deletion dominates: anything deleted in either leg ends deleted.
    /// Keys of `second` not shadowed by this map are carried over; entries
    /// that would map a path to itself are dropped.
    pub fn compose(&self, second: &AliasMap) -> AliasMap {
        let mut entries = BTreeMap::new();
        for (old, target) in &self.entries {
            let end = match target {
                AliasTarget::Deleted => AliasTarget::Deleted,
                AliasTarget::Moved(mid) => match second.resolve(mid) {
                    Resolution::Deleted => AliasTarget::Deleted,
                    Resolution::Kept(p) | Resolution::Renamed(p) => AliasTarget::Moved(p),
                },
            };
            if let AliasTarget::Moved(p) = &end {
                if p == old {
                    continue;
                }
            }
            entries.insert(old.clone(), end);
        }
        for (old, target) in &second.entries {
            if !self.entries.contains_key(old) {
                entries.insert(old.clone(), target.clone());
            }
        }
        AliasMap { entries }
    }

    pub fn contains_key(&self, path: &NormalizedPath) -> bool {
        self.entries.contains_key(path)
    }

    pub fn get(&self, path: &NormalizedPath) -> Option<&AliasTarget> {
        self.entries.get(path)
    }

    /// The deleted set D: keys mapping to the sentinel.
    pub fn deleted_set(&self) -> BTreeSet<NormalizedPath> {
        self.entries
            .iter()
            .filter(|(_, t)| matches!(t, AliasTarget::Deleted))
            .map(|(k, _)| k.clone())
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NormalizedPath, &AliasTarget)> {
        self.entries.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &NormalizedPath> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when no `Moved` target is also a key and no key maps to itself.
    pub fn is_collapsed(&self) -> bool {
        self.entries.iter().all(|(k, t)| match t {
            AliasTarget::Deleted => true,
            AliasTarget::Moved(p) => p != k && !self.entries.contains_key(p),
        })
    }
}

fn target_str(t: &AliasTarget) -> String {
    match t {
        AliasTarget::Deleted => DELETED_SENTINEL.to_string(),
        AliasTarget::Moved(p) => p.to_string(),
    }
}

// Serialized form is a flat JSON object, old path → new path or sentinel.
impl Serialize for AliasMap {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.entries.len()))?;
        for (k, t) in &self.entries {
            match t {
                AliasTarget::Deleted => map.serialize_entry(k.as_str(), DELETED_SENTINEL)?,
                AliasTarget::Moved(p) => map.serialize_entry(k.as_str(), p.as_str())?,
            }
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for AliasMap {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = AliasMap;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map of old path → new path or __DELETED__")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<AliasMap, A::Error> {
                let mut pairs = Vec::new();
                while let Some((k, v)) = access.next_entry::<String, String>()? {
                    let old = NormalizedPath::parse(&k)
                        .ok_or_else(|| serde::de::Error::custom(format!("invalid path {k:?}")))?;
                    let target = if v == DELETED_SENTINEL {
                        AliasTarget::Deleted
                    } else {
                        AliasTarget::Moved(NormalizedPath::parse(&v).ok_or_else(|| {
                            serde::de::Error::custom(format!("invalid path {v:?}"))
                        })?)
                    };
                    pairs.push((old, target));
                }
                AliasMap::build(pairs).map_err(serde::de::Error::custom)
            }
        }
        deserializer.deserialize_map(V)
    }
}

/// The finite set of paths existing at the target snapshot Y — the legal
/// output universe for scoring.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SnapshotIndex {
    paths: BTreeSet<NormalizedPath>,
}

impl SnapshotIndex {
    pub fn from_paths(paths: impl IntoIterator<Item = NormalizedPath>) -> Self {
        Self {
            paths: paths.into_iter().collect(),
        }
    }

    /// Load from a newline-delimited path listing. Blank lines are skipped;
    /// unnormalizable lines are rejected.
    pub fn from_listing(text: &str) -> Result<Self, AliasError> {
        let mut paths = BTreeSet::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let p = NormalizedPath::parse(line)
                .ok_or_else(|| AliasError::InvalidPath(line.to_string()))?;
            paths.insert(p);
        }
        Ok(Self { paths })
    }

    pub fn from_listing_file(path: &Path) -> std::io::Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut paths = BTreeSet::new();
        for line in std::io::BufReader::new(file).lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(p) = NormalizedPath::parse(line) {
                paths.insert(p);
            }
        }
        Ok(Self { paths })
    }

    /// Index a checked-out tree, skipping `.git`.
    pub fn from_tree(root: &Path) -> std::io::Result<Self> {
        let mut paths = BTreeSet::new();
        for entry in walkdir::WalkDir::new(root)
            .into_iter()
            .filter_entry(|e| e.file_name() != ".git")
        {
            let entry = entry?;
            if !entry.file_type().is_file() {
                continue;
            }
            let rel = entry
                .path()
                .strip_prefix(root)
                .expect("walkdir yields paths under root");
            if let Some(p) = NormalizedPath::parse(&rel.to_string_lossy()) {
                paths.insert(p);
            }
        }
        Ok(Self { paths })
    }

    pub fn contains(&self, path: &NormalizedPath) -> bool {
        self.paths.contains(path)
    }

    pub fn iter(&self) -> impl Iterator<Item = &NormalizedPath> {
        self.paths.iter()
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Window-consistency check: the snapshot must be disjoint from the
    /// deleted set and contain every rename target.
    pub fn verify_against(&self, alias: &AliasMap) -> Result<(), String> {
        for (old, target) in alias.iter() {
            match target {
                AliasTarget::Deleted => {
                    if self.contains(old) {
                        return Err(format!("deleted path {old} present in snapshot"));
                    }
                }
                AliasTarget::Moved(new) => {
                    if !self.contains(new) {
                        return Err(format!("rename target {new} missing from snapshot"));
                    }
                }
            }
        }
        Ok(())
    }
}

impl FromIterator<NormalizedPath> for SnapshotIndex {
    fn from_iter<T: IntoIterator<Item = NormalizedPath>>(iter: T) -> Self {
        Self::from_paths(iter)
    }
}
