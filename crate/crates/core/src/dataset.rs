//! Training-set forging: synthesize the NEW pool from changed files, screen
//! the OLD pool through the blocklist, validate every label against the
//! alias map and snapshot, and mix at exact NEW:OLD counts.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::Digest;
use thiserror::Error;

use crate::alias::{AliasMap, NormalizedPath, Resolution, SnapshotIndex};
use crate::diff::scan_top_level_symbols;
use crate::service::ChatClient;
use crate::summary::DeltaSummary;

/// Prompt for synthesizing NEW training pairs from a diff summary.
/// `{target}` and `{max_files_per_q}` are substituted before sending.
pub const DIFF_SYNTH_PROMPT: &str = r#"You are given:
- The repository-relative file path that changed (pre/post as relevant)
- A concise English summary describing how that file changed (derived from a git diff)

Your task:
- Propose up to {target} specific developer questions about the change in this file.
- Each question must include at least one changed symbol (function/class/param/constant) in backticks.
- Each item must include a minimal list (1-{max_files_per_q}) of repository-root-relative paths relevant to answering it.
- Output ONLY this JSON shape (no extra keys, no prose):

{
 "samples": [
 {
 "question": "Developer question here with at least one `ChangedSymbol`",
 "relevant_file_paths": ["file1.py", "dir/file2.py"]
 }
]
}

Constraints:
- Focus strictly on the described changes (not the whole repo).
- Use repo-root-relative UNIX paths that actually exist.
- No file names or paths in the *question* text (symbols OK)."#;

/// Prompt for synthesizing NEW training pairs from whole-file content.
/// `{max_per_file}` and `{max_files_per_q}` are substituted before sending.
pub const FULL_FILE_SYNTH_PROMPT: &str = r#"You are a senior software engineer analyzing a codebase.

Given:
- 1) The repository-root-relative path of the current file
- 2) The entire contents of the current file

Your task:
- Generate up to {max_per_file} realistic, high-quality developer questions.
- Each question should require understanding the current file (and other files when natural).
- For each question, output ONLY the minimal set of file paths (1-{max_files_per_q}) that are relevant.
- Paths MUST be repo-root-relative, use "/", exist, be sorted & unique.

Return ONLY:
{
 "samples": [
 {"question": "Developer question here", "relevant_file_paths": ["file1.ext"]}
]
}
(No prose.)"#;

pub const SYNTH_TEMPERATURE: f32 = 0.2;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("synthesis anchor {0} is not a Modified/Added file")]
    NotAnAnchor(String),
    #[error("{pool} pool holds {have} examples but the recipe needs {want}")]
    PoolTooSmall {
        pool: &'static str,
        want: usize,
        have: usize,
    },
    #[error("bad JSONL record on line {line}: {reason}")]
    BadRecord { line: usize, reason: String },
}

/// Where an example came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Origin {
    #[serde(rename = "NEW")]
    New,
    #[serde(rename = "OLD")]
    Old,
}

/// How an example's supervision was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DatasetMode {
    #[serde(rename = "git-diff")]
    GitDiff,
    #[serde(rename = "full-file")]
    FullFile,
    #[serde(rename = "base")]
    Base,
}

/// One question → gold-path-set example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAExample {
    #[serde(default)]
    pub id: String,
    pub question: String,
    #[serde(rename = "relevant_file_paths")]
    pub gold_paths: BTreeSet<NormalizedPath>,
    #[serde(default = "default_origin")]
    pub origin: Origin,
    #[serde(default = "default_mode")]
    pub mode: DatasetMode,
    #[serde(skip)]
    pub anchor_path: Option<NormalizedPath>,
}

fn default_origin() -> Origin {
    Origin::Old
}

fn default_mode() -> DatasetMode {
    DatasetMode::Base
}

impl QAExample {
    pub fn new(
        question: String,
        gold_paths: BTreeSet<NormalizedPath>,
        origin: Origin,
        mode: DatasetMode,
        anchor_path: Option<NormalizedPath>,
    ) -> Self {
        let mut ex = Self {
            id: String::new(),
            question,
            gold_paths,
            origin,
            mode,
            anchor_path,
        };
        ex.id = ex.content_id();
        ex
    }

    /// Content hash of (question, sorted gold paths): the stable dedup key.
    pub fn content_id(&self) -> String {
        let mut hasher = sha2::Sha256::new();
        hasher.update(self.question.as_bytes());
        for p in &self.gold_paths {
            hasher.update([0u8]);
            hasher.update(p.as_str().as_bytes());
        }
        let digest = hasher.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Serialize examples as JSONL, one compact record per line.
pub fn write_jsonl(examples: &[QAExample]) -> String {
    let mut out = String::new();
    for ex in examples {
        out.push_str(&serde_json::to_string(ex).expect("example serializes"));
        out.push('\n');
    }
    out
}

/// Read examples from JSONL. Records missing `id` get their content hash;
/// records missing `origin`/`mode` default to OLD/base.
pub fn read_jsonl(text: &str) -> Result<Vec<QAExample>, DatasetError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut ex: QAExample =
            serde_json::from_str(line).map_err(|e| DatasetError::BadRecord {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        if ex.gold_paths.is_empty() {
            return Err(DatasetError::BadRecord {
                line: idx + 1,
                reason: "empty relevant_file_paths".to_string(),
            });
        }
        if ex.id.is_empty() {
            ex.id = ex.content_id();
        }
        out.push(ex);
    }
    Ok(out)
}

/// Backend selection for question synthesis.
pub enum SynthBackend<'a> {
    /// Deterministic templated questions, no network.
    Offline,
    Service(&'a ChatClient),
}

/// What synthesis produced for one anchor file, plus bookkeeping on what was
/// discarded along the way.
#[derive(Debug, Default)]
pub struct SynthOutcome {
    pub examples: Vec<QAExample>,
    /// Service samples dropped for exceeding `max_files_per_q` or carrying
    /// no backticked symbol / no valid path.
    pub dropped_samples: usize,
    /// The file was skipped after a malformed reply survived the retry.
    pub skipped_file: bool,
}

fn backticked_symbol_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"`([A-Za-z_][A-Za-z0-9_]*)`").expect("valid regex"))
}

fn has_backticked_symbol(text: &str) -> bool {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"`[^`]+`").expect("valid regex"));
    re.is_match(text)
}

/// Identifier-shaped names mentioned in backticks, first-occurrence order.
/// Path-like mentions (anything with `/` or `.`) don't qualify.
pub fn backticked_symbols(text: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for caps in backticked_symbol_re().captures_iter(text) {
        let name = caps[1].to_string();
        if seen.insert(name.clone()) {
            out.push(name);
        }
    }
    out
}

#[derive(Deserialize)]
struct SynthReply {
    samples: Vec<SynthSample>,
}

#[derive(Deserialize)]
struct SynthSample {
    question: String,
    relevant_file_paths: Vec<String>,
}

fn collect_service_samples(
    reply: &str,
    max_files_per_q: usize,
    require_symbol: bool,
    mode: DatasetMode,
    anchor: &NormalizedPath,
    outcome: &mut SynthOutcome,
) -> bool {
    let Ok(parsed) = serde_json::from_str::<SynthReply>(reply) else {
        return false;
    };
    for sample in parsed.samples {
        if require_symbol && !has_backticked_symbol(&sample.question) {
            outcome.dropped_samples += 1;
            continue;
        }
        if sample.relevant_file_paths.is_empty()
            || sample.relevant_file_paths.len() > max_files_per_q
        {
            outcome.dropped_samples += 1;
            continue;
        }
        let mut gold = BTreeSet::new();
        let mut bad_path = false;
        for raw in &sample.relevant_file_paths {
            match NormalizedPath::parse(raw) {
                Some(p) => {
                    gold.insert(p);
                }
                None => {
                    bad_path = true;
                    break;
                }
            }
        }
        if bad_path || gold.is_empty() {
            outcome.dropped_samples += 1;
            continue;
        }
        outcome.examples.push(QAExample::new(
            sample.question,
            gold,
            Origin::New,
            mode,
            Some(anchor.clone()),
        ));
    }
    true
}

/// Synthesize NEW examples from one M/A file's delta summary. The offline
/// backend emits one deterministic question per symbol the summary names;
/// the service backend sends the synthesis prompt and parses the
/// `{"samples":[…]}` reply, retrying a malformed reply once before skipping
/// the file.
pub fn synth_new_from_diff(
    path: &NormalizedPath,
    summary: &DeltaSummary,
    target: usize,
    max_files_per_q: usize,
    backend: &SynthBackend<'_>,
) -> Result<SynthOutcome, DatasetError> {
    if summary.status != "A" && summary.status != "M" {
        return Err(DatasetError::NotAnAnchor(path.to_string()));
    }
    let mut outcome = SynthOutcome::default();
    if target == 0 {
        return Ok(outcome);
    }
    match backend {
        SynthBackend::Offline => {
            for symbol in backticked_symbols(&summary.text).into_iter().take(target) {
                let question =
                    format!("What changed in the behavior of `{symbol}` in this window?");
                outcome.examples.push(QAExample::new(
                    question,
                    BTreeSet::from([path.clone()]),
                    Origin::New,
                    DatasetMode::GitDiff,
                    Some(path.clone()),
                ));
            }
        }
        SynthBackend::Service(client) => {
            let system = DIFF_SYNTH_PROMPT
                .replace("{target}", &target.to_string())
                .replace("{max_files_per_q}", &max_files_per_q.to_string());
            let user = format!("- path: {path}\n- summary: {}", summary.text);
            let mut parsed_ok = false;
            for _ in 0..2 {
                match client.complete(&system, &user, SYNTH_TEMPERATURE) {
                    Ok(reply) => {
                        if collect_service_samples(
                            &reply,
                            max_files_per_q,
                            true,
                            DatasetMode::GitDiff,
                            path,
                            &mut outcome,
                        ) {
                            parsed_ok = true;
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
            if !parsed_ok {
                outcome.skipped_file = true;
            }
            outcome.examples.truncate(target);
        }
    }
    Ok(outcome)
}

/// Synthesize NEW examples from whole-file content at the head snapshot.
/// The offline backend derives questions from top-level symbol definitions.
pub fn synth_new_from_file(
    path: &NormalizedPath,
    content: &str,
    max_per_file: usize,
    max_files_per_q: usize,
    backend: &SynthBackend<'_>,
) -> Result<SynthOutcome, DatasetError> {
    let mut outcome = SynthOutcome::default();
    if max_per_file == 0 || content.is_empty() {
        return Ok(outcome);
    }
    match backend {
        SynthBackend::Offline => {
            for symbol in scan_top_level_symbols(content).into_iter().take(max_per_file) {
                let question = format!(
                    "How does `{symbol}` behave in the current version of the code?"
                );
                outcome.examples.push(QAExample::new(
                    question,
                    BTreeSet::from([path.clone()]),
                    Origin::New,
                    DatasetMode::FullFile,
                    Some(path.clone()),
                ));
            }
        }
        SynthBackend::Service(client) => {
            let system = FULL_FILE_SYNTH_PROMPT
                .replace("{max_per_file}", &max_per_file.to_string())
                .replace("{max_files_per_q}", &max_files_per_q.to_string());
            let user = format!("- path: {path}\n- content:\n```\n{content}\n```");
            let mut parsed_ok = false;
            for _ in 0..2 {
                match client.complete(&system, &user, SYNTH_TEMPERATURE) {
                    Ok(reply) => {
                        if collect_service_samples(
                            &reply,
                            max_files_per_q,
                            false,
                            DatasetMode::FullFile,
                            path,
                            &mut outcome,
                        ) {
                            parsed_ok = true;
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
            if !parsed_ok {
                outcome.skipped_file = true;
            }
            outcome.examples.truncate(max_per_file);
        }
    }
    Ok(outcome)
}

/// Why an example was rejected (or had its labels rewritten) during
/// validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    /// A gold path resolves to the deletion sentinel — never label a
    /// deleted path.
    #[serde(rename = "deleted-label")]
    DeletedLabel,
    /// A gold path is absent from the target snapshot after remapping.
    #[serde(rename = "not-in-snapshot")]
    NotInSnapshot,
    /// A gold label was rewritten through the alias map (kept, logged).
    #[serde(rename = "label-remapped")]
    LabelRemapped,
}

/// One reject-log record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub question: String,
    pub reason: RejectReason,
    pub path: String,
}

/// Pass every gold label through the alias map and the snapshot index.
/// Renamed labels are rewritten to their new path (logged); any example
/// labeling a deleted path or a path outside the snapshot is rejected.
/// Rejections are data, not failures.
pub fn validate_labels(
    examples: Vec<QAExample>,
    alias: &AliasMap,
    snapshot: &SnapshotIndex,
) -> (Vec<QAExample>, Vec<Rejection>) {
    let mut kept = Vec::new();
    let mut log = Vec::new();
    'example: for ex in examples {
        let mut remapped = BTreeSet::new();
        for path in &ex.gold_paths {
            let resolved = match alias.resolve(path) {
                Resolution::Deleted => {
                    log.push(Rejection {
                        id: ex.id.clone(),
                        question: ex.question.clone(),
                        reason: RejectReason::DeletedLabel,
                        path: path.to_string(),
                    });
                    continue 'example;
                }
                Resolution::Renamed(new) => {
                    log.push(Rejection {
                        id: ex.id.clone(),
                        question: ex.question.clone(),
                        reason: RejectReason::LabelRemapped,
                        path: format!("{path} -> {new}"),
                    });
                    new
                }
                Resolution::Kept(p) => p,
            };
            if !snapshot.contains(&resolved) {
                log.push(Rejection {
                    id: ex.id.clone(),
                    question: ex.question.clone(),
                    reason: RejectReason::NotInSnapshot,
                    path: resolved.to_string(),
                });
                continue 'example;
            }
            remapped.insert(resolved);
        }
        if remapped.is_empty() {
            continue;
        }
        kept.push(QAExample::new(
            ex.question,
            remapped,
            ex.origin,
            ex.mode,
            ex.anchor_path,
        ));
    }
    (kept, log)
}

/// Blocklist screen for the OLD pool: keep exactly the examples whose gold
/// paths are disjoint from every changed path (mods, adds, deletes, and both
/// sides of renames).
pub fn filter_old_pool(
    old_examples: Vec<QAExample>,
    changed: &BTreeSet<NormalizedPath>,
) -> Vec<QAExample> {
    old_examples
        .into_iter()
        .filter(|ex| ex.gold_paths.is_disjoint(changed))
        .collect()
}

/// Exact NEW:OLD counts and the sampling seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixRecipe {
    pub new_count: usize,
    pub old_count: usize,
    pub seed: u64,
}

/// Sample exactly `new_count` NEW and `old_count` OLD examples without
/// replacement and shuffle them, all driven by the recipe seed. The output
/// order is a pure function of (pools, recipe).
pub fn mix(
    new_pool: &[QAExample],
    old_pool: &[QAExample],
    recipe: &MixRecipe,
) -> Result<Vec<QAExample>, DatasetError> {
    if recipe.new_count > new_pool.len() {
        return Err(DatasetError::PoolTooSmall {
            pool: "NEW",
            want: recipe.new_count,
            have: new_pool.len(),
        });
    }
    if recipe.old_count > old_pool.len() {
        return Err(DatasetError::PoolTooSmall {
            pool: "OLD",
            want: recipe.old_count,
            have: old_pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
    let mut picked: Vec<QAExample> =
        rand::seq::index::sample(&mut rng, new_pool.len(), recipe.new_count)
            .into_iter()
            .map(|i| new_pool[i].clone())
            .collect();
    picked.extend(
        rand::seq::index::sample(&mut rng, old_pool.len(), recipe.old_count)
            .into_iter()
            .map(|i| old_pool[i].clone()),
    );
    picked.shuffle(&mut rng);
    Ok(picked)
}
