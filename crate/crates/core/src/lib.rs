//! Repository evolution as a machine-checkable object.
//!
//! Given a git commit window X→Y, this crate builds the change manifest and
//! alias map, extracts and summarizes per-file deltas, forges NEW:OLD mixed
//! training sets, composes delta-patched retrieval prompts, and scores
//! set-valued path predictions with alias-aware Exact Match and
//! micro-averaged Recall plus a no-remap forgetting probe.

pub mod alias;
pub mod dataset;
pub mod diff;
pub mod eval;
pub mod harness;
pub mod icl;
pub mod service;
pub mod summary;
pub mod window;

pub use alias::{AliasMap, AliasTarget, NormalizedPath, Resolution, SnapshotIndex};
pub use dataset::{MixRecipe, Origin, QAExample};
pub use eval::{EvalReport, InstanceRecord, ProbeReport, Slice};
pub use summary::DeltaSummary;
pub use window::{ChangeEntry, ChangeKind, ChangeManifest, WindowRef};
