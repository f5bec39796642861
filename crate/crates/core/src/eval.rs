//! Alias-aware scoring: parse model output under the strict contract, remap
//! predictions through the alias map, compute EM and micro-averaged recall,
//! classify slices, tabulate per-path reasons, and run the no-remap
//! forgetting probe.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alias::{AliasMap, AliasTarget, NormalizedPath, Resolution, SnapshotIndex};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("instance {0} has an empty gold set")]
    EmptyGold(String),
    #[error("no instances to score")]
    NoInstances,
    #[error("probe gold for {id} contains {path}, which is neither renamed nor deleted in the window")]
    ProbeGoldNotStructural { id: String, path: String },
}

/// How one predicted path was disposed of during remapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathReason {
    /// Already a snapshot path; kept.
    Direct,
    /// Hit arrived via the alias map's rename edge; kept as the new path.
    AliasRename,
    /// Predicted a deleted path; dropped — no credit, no penalty.
    AliasDeleted,
    /// Unique basename match in the snapshot; analysis only, never scored.
    RescuedSuffix,
    /// Unique high-similarity match; analysis only, never scored.
    RescuedFuzzy,
    /// Not a normalizable root-relative path; dropped.
    Invalid,
    /// No mapping and no conservative rescue; dropped.
    Unknown,
}

pub const ALL_REASONS: [PathReason; 7] = [
    PathReason::Direct,
    PathReason::AliasRename,
    PathReason::AliasDeleted,
    PathReason::RescuedSuffix,
    PathReason::RescuedFuzzy,
    PathReason::Invalid,
    PathReason::Unknown,
];

/// Evaluation slice by gold-path change status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Slice {
    #[serde(rename = "NEW")]
    New,
    #[serde(rename = "OLD")]
    Old,
    #[serde(rename = "MIXED")]
    Mixed,
}

pub const ALL_SLICES: [Slice; 3] = [Slice::New, Slice::Old, Slice::Mixed];

/// Extract the model's path list from raw output. Finds the first
/// well-formed JSON array anywhere in the text (models sometimes wrap their
/// answer in prose), keeps string elements, drops non-strings, and collapses
/// duplicates preserving first occurrence. No array means an empty
/// prediction.
pub fn parse_prediction(raw: &str) -> Vec<String> {
    for (idx, _) in raw.char_indices().filter(|(_, c)| *c == '[') {
        let mut stream =
            serde_json::Deserializer::from_str(&raw[idx..]).into_iter::<serde_json::Value>();
        if let Some(Ok(serde_json::Value::Array(items))) = stream.next() {
            let mut seen = BTreeSet::new();
            let mut out = Vec::new();
            for item in items {
                if let serde_json::Value::String(s) = item {
                    if seen.insert(s.clone()) {
                        out.push(s);
                    }
                }
            }
            return out;
        }
    }
    Vec::new()
}

/// Conservative rescue classification for a path that is neither in the
/// snapshot nor in the alias domain. `rescued_suffix` needs exactly one
/// snapshot path ending in `/<basename>` (or equal to the basename);
/// `rescued_fuzzy` needs a unique best full-path similarity of at least
/// 0.80. Anything else is `unknown`. Rescues never enter the scored set.
pub fn rescue_classify(path: &NormalizedPath, snapshot: &SnapshotIndex) -> PathReason {
    let base = path.basename();
    let suffix = format!("/{base}");
    let mut matches = snapshot
        .iter()
        .filter(|s| s.as_str() == base || s.as_str().ends_with(&suffix));
    if let Some(_first) = matches.next() {
        if matches.next().is_none() {
            return PathReason::RescuedSuffix;
        }
        return PathReason::Unknown;
    }

    // Similarity 1 - d/L with L = max length; compared exactly via integer
    // cross-multiplication so ties are detected without float noise.
    let a = path.as_str();
    let len_a = a.chars().count();
    let mut best: Option<(usize, usize)> = None; // (distance, max_len)
    let mut best_unique = true;
    for s in snapshot.iter() {
        let d = strsim::levenshtein(a, s.as_str());
        let l = len_a.max(s.as_str().chars().count());
        match best {
            None => best = Some((d, l)),
            Some((bd, bl)) => {
                // sim > best_sim  ⟺  d/l < bd/bl  ⟺  d*bl < bd*l
                if d * bl < bd * l {
                    best = Some((d, l));
                    best_unique = true;
                } else if d * bl == bd * l {
                    best_unique = false;
                }
            }
        }
    }
    if let Some((d, l)) = best {
        // sim ≥ 0.80  ⟺  1 - d/l ≥ 0.8  ⟺  5d ≤ l
        if best_unique && 5 * d <= l {
            return PathReason::RescuedFuzzy;
        }
    }
    PathReason::Unknown
}

/// The four-step remap: normalize, prefer the snapshot (a predicted path
/// that exists at the target is a valid current artifact even if it is also
/// an alias key), resolve through the alias map, and classify what remains
/// for analysis. Only `direct` and in-snapshot `alias_rename` paths enter
/// the scored set, so the result is always a subset of the snapshot.
pub fn remap_predictions(
    paths: &[String],
    alias: &AliasMap,
    snapshot: &SnapshotIndex,
) -> (BTreeSet<NormalizedPath>, BTreeMap<String, PathReason>) {
    let mut remapped = BTreeSet::new();
    let mut reasons = BTreeMap::new();
    for raw in paths {
        let reason_slot = reasons.entry(raw.clone());
        let Some(path) = NormalizedPath::parse(raw) else {
            reason_slot.or_insert(PathReason::Invalid);
            continue;
        };
        if snapshot.contains(&path) {
            remapped.insert(path);
            reason_slot.or_insert(PathReason::Direct);
            continue;
        }
        match alias.resolve(&path) {
            Resolution::Renamed(new) => {
                if snapshot.contains(&new) {
                    remapped.insert(new);
                }
                reason_slot.or_insert(PathReason::AliasRename);
            }
            Resolution::Deleted => {
                reason_slot.or_insert(PathReason::AliasDeleted);
            }
            Resolution::Kept(_) => {
                reason_slot.or_insert(rescue_classify(&path, snapshot));
            }
        }
    }
    (remapped, reasons)
}

/// Per-instance exact match and recall counts. Gold must be nonempty.
pub fn score_instance(
    remapped: &BTreeSet<NormalizedPath>,
    gold: &BTreeSet<NormalizedPath>,
) -> Result<(u8, usize, usize), EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold("<instance>".to_string()));
    }
    let em = u8::from(remapped == gold);
    let numer = remapped.intersection(gold).count();
    Ok((em, numer, gold.len()))
}

/// Everything recorded about one scored question.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: String,
    pub raw_output: String,
    pub parsed_paths: Vec<String>,
    pub remapped_set: BTreeSet<NormalizedPath>,
    pub gold: BTreeSet<NormalizedPath>,
    pub reasons: BTreeMap<String, PathReason>,
    pub slice: Slice,
    pub em: u8,
    pub recall_numer: usize,
    pub recall_denom: usize,
}

/// Score one question end to end: parse, remap, compare against gold.
pub fn score_prediction(
    id: &str,
    raw_output: &str,
    gold: &BTreeSet<NormalizedPath>,
    alias: &AliasMap,
    snapshot: &SnapshotIndex,
    changed_ma: &BTreeSet<NormalizedPath>,
) -> Result<InstanceRecord, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold(id.to_string()));
    }
    let parsed_paths = parse_prediction(raw_output);
    let (remapped_set, reasons) = remap_predictions(&parsed_paths, alias, snapshot);
    let (em, recall_numer, recall_denom) = score_instance(&remapped_set, gold)?;
    Ok(InstanceRecord {
        id: id.to_string(),
        raw_output: raw_output.to_string(),
        parsed_paths,
        remapped_set,
        gold: gold.clone(),
        reasons,
        slice: classify_slice(gold, changed_ma),
        em,
        recall_numer,
        recall_denom,
    })
}

/// NEW when every gold path was Modified/Added in the window, OLD when none
/// was, MIXED otherwise.
pub fn classify_slice(
    gold: &BTreeSet<NormalizedPath>,
    changed_ma: &BTreeSet<NormalizedPath>,
) -> Slice {
    let hits = gold.iter().filter(|p| changed_ma.contains(p)).count();
    if hits == gold.len() {
        Slice::New
    } else if hits == 0 {
        Slice::Old
    } else {
        Slice::Mixed
    }
}

/// Aggregates over one evaluation slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceStats {
    pub n: usize,
    pub em: f64,
    pub mr: f64,
}

/// Corpus-level report: EM is the mean of per-instance indicators, MR is
/// total true positives over total gold paths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub em: f64,
    pub mr: f64,
    pub per_slice: BTreeMap<Slice, SliceStats>,
    pub reason_counts: BTreeMap<PathReason, usize>,
}

fn aggregate(records: &[&InstanceRecord]) -> SliceStats {
    if records.is_empty() {
        return SliceStats {
            n: 0,
            em: 0.0,
            mr: 0.0,
        };
    }
    let n = records.len();
    let em_sum: usize = records.iter().map(|r| r.em as usize).sum();
    let numer: usize = records.iter().map(|r| r.recall_numer).sum();
    let denom: usize = records.iter().map(|r| r.recall_denom).sum();
    SliceStats {
        n,
        em: em_sum as f64 / n as f64,
        mr: numer as f64 / denom as f64,
    }
}

/// Reduce instance records into the corpus report. Slice aggregates are
/// computed over each slice's records independently; reason counts are
/// summed over every path of every record.
pub fn score_corpus(records: &[InstanceRecord]) -> Result<EvalReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::NoInstances);
    }
    let all: Vec<&InstanceRecord> = records.iter().collect();
    let overall = aggregate(&all);
    let mut per_slice = BTreeMap::new();
    for slice in ALL_SLICES {
        let subset: Vec<&InstanceRecord> =
            records.iter().filter(|r| r.slice == slice).collect();
        per_slice.insert(slice, aggregate(&subset));
    }
    let mut reason_counts: BTreeMap<PathReason, usize> =
        ALL_REASONS.iter().map(|r| (*r, 0)).collect();
    for record in records {
        for reason in record.reasons.values() {
            *reason_counts.entry(*reason).or_insert(0) += 1;
        }
    }
    Ok(EvalReport {
        n: overall.n,
        em: overall.em,
        mr: overall.mr,
        per_slice,
        reason_counts,
    })
}

/// How the probe classifies each raw predicted path (no remapping).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeCounts {
    pub old_name: usize,
    pub new_name: usize,
    pub deleted_old: usize,
    pub unknown: usize,
}

impl ProbeCounts {
    pub fn total(&self) -> usize {
        self.old_name + self.new_name + self.deleted_old + self.unknown
    }
}

/// Forgetting-probe report: raw old-name emissions plus no-remap scores
/// against X-side gold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeReport {
    pub counts: ProbeCounts,
    pub emission_rate: f64,
    pub old_em: f64,
    pub old_mr: f64,
}

/// One probe question: X-side gold where every path was renamed or deleted.
#[derive(Debug, Clone)]
pub struct ProbeInstance {
    pub id: String,
    pub gold_old_side: BTreeSet<NormalizedPath>,
    pub raw_output: String,
}

/// Score the forgetting probe. Predictions are classified raw — old_name
/// for alias-domain paths with a rename target, deleted_old for the deleted
/// set, new_name for snapshot paths that are some rename's target — and
/// never remapped. The emission rate is the share of predicted paths in
/// D ∪ (dom(alias) \ P_Y); old_em/old_mr score the raw sets against X-side
/// gold.
pub fn probe_score(
    instances: &[ProbeInstance],
    alias: &AliasMap,
    snapshot: &SnapshotIndex,
) -> Result<ProbeReport, EvalError> {
    if instances.is_empty() {
        return Err(EvalError::NoInstances);
    }
    for inst in instances {
        if inst.gold_old_side.is_empty() {
            return Err(EvalError::EmptyGold(inst.id.clone()));
        }
        for path in &inst.gold_old_side {
            if !alias.contains_key(path) {
                return Err(EvalError::ProbeGoldNotStructural {
                    id: inst.id.clone(),
                    path: path.to_string(),
                });
            }
        }
    }

    let rename_targets: BTreeSet<&NormalizedPath> = alias
        .iter()
        .filter_map(|(_, t)| match t {
            AliasTarget::Moved(p) => Some(p),
            AliasTarget::Deleted => None,
        })
        .collect();

    let mut counts = ProbeCounts::default();
    let mut emissions = 0usize;
    let mut em_sum = 0usize;
    let mut numer_sum = 0usize;
    let mut denom_sum = 0usize;
    for inst in instances {
        let parsed = parse_prediction(&inst.raw_output);
        let mut predicted_set = BTreeSet::new();
        for raw in &parsed {
            let Some(path) = NormalizedPath::parse(raw) else {
                counts.unknown += 1;
                continue;
            };
            match alias.get(&path) {
                Some(AliasTarget::Moved(_)) => counts.old_name += 1,
                Some(AliasTarget::Deleted) => counts.deleted_old += 1,
                None if snapshot.contains(&path) && rename_targets.contains(&path) => {
                    counts.new_name += 1
                }
                None => counts.unknown += 1,
            }
            if alias.contains_key(&path) && !snapshot.contains(&path) {
                emissions += 1;
            }
            predicted_set.insert(path);
        }
        let (em, numer, denom) = score_instance(&predicted_set, &inst.gold_old_side)?;
        em_sum += em as usize;
        numer_sum += numer;
        denom_sum += denom;
    }

    let total = counts.total();
    Ok(ProbeReport {
        counts,
        emission_rate: if total == 0 {
            0.0
        } else {
            emissions as f64 / total as f64
        },
        old_em: em_sum as f64 / instances.len() as f64,
        old_mr: numer_sum as f64 / denom_sum as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alias::AliasTarget;

    fn p(s: &str) -> NormalizedPath {
        NormalizedPath::parse(s).unwrap()
    }

    fn paths(items: &[&str]) -> BTreeSet<NormalizedPath> {
        items.iter().map(|s| p(s)).collect()
    }

    #[test]
    fn parse_plain_array() {
        assert_eq!(
            parse_prediction(r#"["a.py", "dir/b.py"]"#),
            vec!["a.py", "dir/b.py"]
        );
    }

    #[test]
    fn parse_dedups_and_drops_non_strings() {
        assert_eq!(parse_prediction(r#"["a.py", "a.py", 7]"#), vec!["a.py"]);
    }

    #[test]
    fn parse_lenient_extraction() {
        assert_eq!(parse_prediction(r#"Here you go: ["x.py"] thanks"#), vec!["x.py"]);
        assert_eq!(
            parse_prediction("```json\n[\"a.py\"]\n```"),
            vec!["a.py"]
        );
    }

    #[test]
    fn parse_no_array_is_empty() {
        assert!(parse_prediction("I could not find anything.").is_empty());
        assert!(parse_prediction("").is_empty());
        assert!(parse_prediction("[broken").is_empty());
    }

    #[test]
    fn remap_worked_example() {
        let alias = AliasMap::build([
            (p("flask/app.py"), AliasTarget::Moved(p("src/flask/app.py"))),
            (p("flask/__init__.py"), AliasTarget::Deleted),
        ])
        .unwrap();
        let snapshot = SnapshotIndex::from_paths([p("src/flask/app.py"), p("docs/index.rst")]);
        let preds = vec!["flask/app.py".to_string(), "README.md".to_string()];
        let (remapped, reasons) = remap_predictions(&preds, &alias, &snapshot);
        assert_eq!(remapped, paths(&["src/flask/app.py"]));
        assert_eq!(reasons["flask/app.py"], PathReason::AliasRename);
        assert!(matches!(
            reasons["README.md"],
            PathReason::Unknown | PathReason::RescuedSuffix | PathReason::RescuedFuzzy
        ));

        let gold = paths(&["src/flask/app.py"]);
        let (em, numer, denom) = score_instance(&remapped, &gold).unwrap();
        assert_eq!((em, numer, denom), (1, 1, 1));
    }

    #[test]
    fn remap_drops_deleted_with_reason() {
        let alias = AliasMap::build([(p("flask/__init__.py"), AliasTarget::Deleted)]).unwrap();
        let snapshot = SnapshotIndex::from_paths([p("src/flask/app.py")]);
        let preds = vec!["flask/__init__.py".to_string()];
        let (remapped, reasons) = remap_predictions(&preds, &alias, &snapshot);
        assert!(remapped.is_empty());
        assert_eq!(reasons["flask/__init__.py"], PathReason::AliasDeleted);
    }

    #[test]
    fn remap_identity_when_all_in_snapshot() {
        let snapshot = SnapshotIndex::from_paths([p("a.py"), p("b.py")]);
        let preds = vec!["a.py".to_string(), "b.py".to_string()];
        let (remapped, reasons) = remap_predictions(&preds, &AliasMap::new(), &snapshot);
        assert_eq!(remapped, paths(&["a.py", "b.py"]));
        assert!(reasons.values().all(|r| *r == PathReason::Direct));
    }

    #[test]
    fn remap_snapshot_precedence_over_alias() {
        // An old path reused by a new file at Y scores direct.
        let alias = AliasMap::build([(p("reused.py"), AliasTarget::Moved(p("moved.py")))]).unwrap();
        let snapshot = SnapshotIndex::from_paths([p("reused.py"), p("moved.py")]);
        let preds = vec!["reused.py".to_string()];
        let (remapped, reasons) = remap_predictions(&preds, &alias, &snapshot);
        assert_eq!(remapped, paths(&["reused.py"]));
        assert_eq!(reasons["reused.py"], PathReason::Direct);
    }

    #[test]
    fn remap_flags_invalid_paths() {
        let snapshot = SnapshotIndex::from_paths([p("a.py")]);
        let preds = vec!["../escape.py".to_string()];
        let (remapped, reasons) = remap_predictions(&preds, &AliasMap::new(), &snapshot);
        assert!(remapped.is_empty());
        assert_eq!(reasons["../escape.py"], PathReason::Invalid);
    }

    #[test]
    fn score_instance_cases() {
        let gold = paths(&["a.py"]);
        assert_eq!(score_instance(&BTreeSet::new(), &gold).unwrap(), (0, 0, 1));
        let gold2 = paths(&["a", "b"]);
        let pred = paths(&["a", "b", "c"]);
        assert_eq!(score_instance(&pred, &gold2).unwrap(), (0, 2, 2));
        assert!(score_instance(&pred, &BTreeSet::new()).is_err());
    }

    #[test]
    fn classify_slices() {
        let changed = paths(&["new1.py", "new2.py"]);
        assert_eq!(classify_slice(&paths(&["new1.py"]), &changed), Slice::New);
        assert_eq!(classify_slice(&paths(&["old.py"]), &changed), Slice::Old);
        assert_eq!(
            classify_slice(&paths(&["new1.py", "old.py"]), &changed),
            Slice::Mixed
        );
    }

    #[test]
    fn corpus_hand_arithmetic() {
        let snapshot = SnapshotIndex::from_paths([p("a"), p("b"), p("c"), p("d"), p("e")]);
        let changed = BTreeSet::new();
        let r1 = score_prediction(
            "1",
            r#"["a","b"]"#,
            &paths(&["a", "b"]),
            &AliasMap::new(),
            &snapshot,
            &changed,
        )
        .unwrap();
        let r2 = score_prediction(
            "2",
            r#"["c"]"#,
            &paths(&["c", "d", "e"]),
            &AliasMap::new(),
            &snapshot,
            &changed,
        )
        .unwrap();
        let report = score_corpus(&[r1, r2]).unwrap();
        assert!((report.em - 0.5).abs() < 1e-12);
        assert!((report.mr - 3.0 / 5.0).abs() < 1e-12);
        assert_eq!(report.per_slice[&Slice::Old].n, 2);
        assert_eq!(report.reason_counts[&PathReason::Direct], 3);
    }

    #[test]
    fn corpus_single_instance_equals_instance() {
        let snapshot = SnapshotIndex::from_paths([p("a")]);
        let r = score_prediction(
            "1",
            r#"["a"]"#,
            &paths(&["a"]),
            &AliasMap::new(),
            &snapshot,
            &BTreeSet::new(),
        )
        .unwrap();
        let report = score_corpus(&[r]).unwrap();
        assert_eq!(report.em, 1.0);
        assert_eq!(report.mr, 1.0);
        assert_eq!(report.n, 1);
    }

    #[test]
    fn rescue_suffix_unique() {
        let snapshot = SnapshotIndex::from_paths([p("src/flask/app.py"), p("docs/readme.md")]);
        assert_eq!(
            rescue_classify(&p("app.py"), &snapshot),
            PathReason::RescuedSuffix
        );
    }

    #[test]
    fn rescue_suffix_ambiguous_is_unknown() {
        let snapshot = SnapshotIndex::from_paths([p("a/utils.py"), p("b/utils.py")]);
        assert_eq!(rescue_classify(&p("utils.py"), &snapshot), PathReason::Unknown);
    }

    #[test]
    fn rescue_fuzzy_on_typo() {
        let snapshot = SnapshotIndex::from_paths([p("src/flask/app.py"), p("zzz/other.rs")]);
        // d=1 vs len 16 → sim = 0.9375, unique.
        assert_eq!(
            rescue_classify(&p("src/flask/ap.py"), &snapshot),
            PathReason::RescuedFuzzy
        );
    }

    #[test]
    fn rescue_below_threshold_is_unknown() {
        let snapshot = SnapshotIndex::from_paths([p("alpha/beta.py")]);
        assert_eq!(
            rescue_classify(&p("totally/different.rs"), &snapshot),
            PathReason::Unknown
        );
    }

    #[test]
    fn probe_emission_rate() {
        let alias = AliasMap::build([
            (p("old/a.py"), AliasTarget::Moved(p("new/a.py"))),
            (p("old/gone.py"), AliasTarget::Deleted),
        ])
        .unwrap();
        let snapshot = SnapshotIndex::from_paths([p("new/a.py")]);
        let instances = vec![
            ProbeInstance {
                id: "1".to_string(),
                gold_old_side: paths(&["old/a.py"]),
                raw_output: r#"["old/a.py"]"#.to_string(),
            },
            ProbeInstance {
                id: "2".to_string(),
                gold_old_side: paths(&["old/gone.py"]),
                raw_output: r#"["nowhere.py"]"#.to_string(),
            },
        ];
        let report = probe_score(&instances, &alias, &snapshot).unwrap();
        assert_eq!(report.counts.old_name, 1);
        assert_eq!(report.counts.unknown, 1);
        assert_eq!(report.counts.total(), 2);
        assert!((report.emission_rate - 0.5).abs() < 1e-12);
        assert!((report.old_em - 0.5).abs() < 1e-12);
    }

    #[test]
    fn probe_perfect_old_recall() {
        let alias = AliasMap::build([(p("x/old.py"), AliasTarget::Moved(p("y/new.py")))]).unwrap();
        let snapshot = SnapshotIndex::from_paths([p("y/new.py")]);
        let instances = vec![ProbeInstance {
            id: "1".to_string(),
            gold_old_side: paths(&["x/old.py"]),
            raw_output: r#"["x/old.py"]"#.to_string(),
        }];
        let report = probe_score(&instances, &alias, &snapshot).unwrap();
        assert_eq!(report.old_em, 1.0);
        assert_eq!(report.old_mr, 1.0);
        assert_eq!(report.emission_rate, 1.0);
    }

    #[test]
    fn probe_all_new_names_zero_emission() {
        let alias = AliasMap::build([(p("x/old.py"), AliasTarget::Moved(p("y/new.py")))]).unwrap();
        let snapshot = SnapshotIndex::from_paths([p("y/new.py")]);
        let instances = vec![ProbeInstance {
            id: "1".to_string(),
            gold_old_side: paths(&["x/old.py"]),
            raw_output: r#"["y/new.py"]"#.to_string(),
        }];
        let report = probe_score(&instances, &alias, &snapshot).unwrap();
        assert_eq!(report.counts.new_name, 1);
        assert_eq!(report.emission_rate, 0.0);
        assert_eq!(report.old_em, 0.0);
    }

    #[test]
    fn probe_rejects_non_structural_gold() {
        let alias = AliasMap::build([(p("x/old.py"), AliasTarget::Moved(p("y/new.py")))]).unwrap();
        let snapshot = SnapshotIndex::from_paths([p("y/new.py")]);
        let instances = vec![ProbeInstance {
            id: "bad".to_string(),
            gold_old_side: paths(&["stable.py"]),
            raw_output: "[]".to_string(),
        }];
        let err = probe_score(&instances, &alias, &snapshot).unwrap_err();
        assert!(matches!(err, EvalError::ProbeGoldNotStructural { id, .. } if id == "bad"));
    }
}
