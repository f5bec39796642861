//! Commit-window capture: git-level facts of a window X→Y as a structured
//! change manifest.
//!
//! Capture shells out to the `git` binary so rename detection and diff output
//! stay bit-aligned with git's own behavior. Everything downstream of capture
//! also accepts pre-captured text files, so the full pipeline runs offline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::alias::{AliasError, AliasMap, AliasTarget, NormalizedPath};
use crate::diff;

/// Code-file globs used when a window does not specify its own.
pub const DEFAULT_CODE_GLOBS: &[&str] = &[
    "*.py", "*.ts", "*.tsx", "*.js", "*.jsx", "*.go", "*.rs", "*.java", "*.kt", "*.c", "*.cc",
    "*.cpp", "*.h", "*.hpp", "*.php", "*.rb", "*.swift", "*.cs", "*.sql", "*.sh", "*.bash",
    "*.zsh", "*.html", "*.css", "*.scss",
];

#[derive(Debug, Error)]
pub enum GitError {
    #[error("not a git repository: {0}")]
    NotARepo(PathBuf),
    #[error("cannot resolve ref {rev}: {stderr}")]
    RefResolution { rev: String, stderr: String },
    #[error("`git {args}` exited with {code}: {stderr}")]
    CommandFailed {
        args: String,
        code: i32,
        stderr: String,
    },
    #[error("git output is not valid UTF-8")]
    InvalidUtf8,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: expected {expected} tab-separated fields for status {status:?}, found {found}")]
    FieldCount {
        line: usize,
        status: String,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: unknown status code {status:?}")]
    UnknownStatus { line: usize, status: String },
    #[error("line {line}: invalid path {path:?}")]
    InvalidPath { line: usize, path: String },
    #[error("line {line}: bad quoted path {path:?}: {reason}")]
    BadQuoting {
        line: usize,
        path: String,
        reason: String,
    },
    #[error("line {line}: rename score {score:?} is not a number in 0..=100")]
    BadScore { line: usize, score: String },
    #[error("line {line}: rename with identical old and new path {path:?}")]
    SelfRename { line: usize, path: String },
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("conflicting entries for path {0}")]
    ConflictingEntries(String),
    #[error(transparent)]
    Alias(#[from] AliasError),
}

/// A commit window X→Y over one repository.
#[derive(Debug, Clone)]
pub struct WindowRef {
    pub repo_root: PathBuf,
    pub base_ref: String,
    pub head_ref: String,
    pub path_globs: Vec<String>,
}

impl WindowRef {
    /// Window with the default code-extension globs.
    pub fn new(repo_root: impl Into<PathBuf>, base_ref: &str, head_ref: &str) -> Self {
        Self {
            repo_root: repo_root.into(),
            base_ref: base_ref.to_string(),
            head_ref: head_ref.to_string(),
            path_globs: DEFAULT_CODE_GLOBS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn with_globs(mut self, globs: Vec<String>) -> Self {
        if !globs.is_empty() {
            self.path_globs = globs;
        }
        self
    }
}

/// The kind of change git reported for one path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChangeKind {
    Added {
        path: NormalizedPath,
    },
    Modified {
        path: NormalizedPath,
    },
    Deleted {
        path: NormalizedPath,
    },
    Renamed {
        old_path: NormalizedPath,
        new_path: NormalizedPath,
        score: RenameScore,
    },
}

/// Git rename similarity, 0–100, serialized as the literal `Rnnn` string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RenameScore(u8);

impl RenameScore {
    pub fn new(score: u8) -> Option<Self> {
        (score <= 100).then_some(Self(score))
    }

    pub fn value(&self) -> u8 {
        self.0
    }

    /// The `Rnnn` code, e.g. `R085`.
    pub fn code(&self) -> String {
        format!("R{:03}", self.0)
    }

    pub fn parse_code(code: &str) -> Option<Self> {
        let digits = code.strip_prefix('R')?;
        if digits.is_empty() || digits.len() > 3 || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let n: u16 = digits.parse().ok()?;
        u8::try_from(n).ok().and_then(Self::new)
    }
}

impl fmt::Display for RenameScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl Serialize for RenameScore {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.code())
    }
}

impl<'de> Deserialize<'de> for RenameScore {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        RenameScore::parse_code(&s)
            .ok_or_else(|| D::Error::custom(format!("invalid rename score {s:?}")))
    }
}

/// One row of the window's change list, with an optional English summary
/// attached later by the summarizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeEntry {
    pub kind: ChangeKind,
    pub summary: Option<String>,
}

impl ChangeEntry {
    pub fn new(kind: ChangeKind) -> Self {
        Self {
            kind,
            summary: None,
        }
    }

    /// The path this entry is listed under: current side for A/M/R, the old
    /// (only) path for D.
    pub fn display_path(&self) -> &NormalizedPath {
        match &self.kind {
            ChangeKind::Added { path } | ChangeKind::Modified { path } | ChangeKind::Deleted { path } => path,
            ChangeKind::Renamed { new_path, .. } => new_path,
        }
    }

    /// The pre-window path for renames.
    pub fn old_path(&self) -> Option<&NormalizedPath> {
        match &self.kind {
            ChangeKind::Renamed { old_path, .. } => Some(old_path),
            _ => None,
        }
    }

    pub fn status_code(&self) -> String {
        match &self.kind {
            ChangeKind::Added { .. } => "A".to_string(),
            ChangeKind::Modified { .. } => "M".to_string(),
            ChangeKind::Deleted { .. } => "D".to_string(),
            ChangeKind::Renamed { score, .. } => score.code(),
        }
    }

    pub fn is_new_anchor(&self) -> bool {
        matches!(
            self.kind,
            ChangeKind::Added { .. } | ChangeKind::Modified { .. }
        )
    }
}

impl Serialize for ChangeEntry {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut fields = 2;
        if matches!(self.kind, ChangeKind::Renamed { .. }) {
            fields += 1;
        }
        if self.summary.is_some() {
            fields += 1;
        }
        let mut s = serializer.serialize_struct("ChangeEntry", fields)?;
        s.serialize_field("status", &self.status_code())?;
        match &self.kind {
            ChangeKind::Added { path } | ChangeKind::Modified { path } | ChangeKind::Deleted { path } => {
                s.serialize_field("path", path)?;
            }
            ChangeKind::Renamed {
                old_path, new_path, ..
            } => {
                s.serialize_field("old_path", old_path)?;
                s.serialize_field("new_path", new_path)?;
            }
        }
        if let Some(summary) = &self.summary {
            s.serialize_field("summary", summary)?;
        }
        s.end()
    }
}

#[derive(Deserialize)]
struct RawChangeEntry {
    status: String,
    #[serde(default)]
    path: Option<NormalizedPath>,
    #[serde(default)]
    old_path: Option<NormalizedPath>,
    #[serde(default)]
    new_path: Option<NormalizedPath>,
    #[serde(default)]
    summary: Option<String>,
}

impl<'de> Deserialize<'de> for ChangeEntry {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawChangeEntry::deserialize(deserializer)?;
        let kind = match raw.status.as_str() {
            "A" => ChangeKind::Added {
                path: raw.path.ok_or_else(|| D::Error::missing_field("path"))?,
            },
            "M" => ChangeKind::Modified {
                path: raw.path.ok_or_else(|| D::Error::missing_field("path"))?,
            },
            "D" => ChangeKind::Deleted {
                path: raw.path.ok_or_else(|| D::Error::missing_field("path"))?,
            },
            code => {
                let score = RenameScore::parse_code(code)
                    .ok_or_else(|| D::Error::custom(format!("unknown status {code:?}")))?;
                ChangeKind::Renamed {
                    old_path: raw
                        .old_path
                        .ok_or_else(|| D::Error::missing_field("old_path"))?,
                    new_path: raw
                        .new_path
                        .ok_or_else(|| D::Error::missing_field("new_path"))?,
                    score,
                }
            }
        };
        Ok(ChangeEntry {
            kind,
            summary: raw.summary,
        })
    }
}

/// Rename record in the bundle's convenience list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenameRecord {
    pub old: NormalizedPath,
    pub new: NormalizedPath,
    pub score: RenameScore,
}

/// The per-window bundle: SHAs, change entries, alias map, and the
/// projection lists that drive dataset construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeManifest {
    pub base: String,
    pub head: String,
    pub changes: Vec<ChangeEntry>,
    pub alias_map: AliasMap,
    pub adds: Vec<NormalizedPath>,
    pub mods: Vec<NormalizedPath>,
    pub deletes: Vec<NormalizedPath>,
    pub renames: Vec<RenameRecord>,
}

impl ChangeManifest {
    /// Every path touched by the window: mods, adds, deletes, and both sides
    /// of each rename. This is the Inc-FT blocklist universe.
    pub fn changed_paths(&self) -> BTreeSet<NormalizedPath> {
        let mut set = BTreeSet::new();
        set.extend(self.adds.iter().cloned());
        set.extend(self.mods.iter().cloned());
        set.extend(self.deletes.iter().cloned());
        for r in &self.renames {
            set.insert(r.old.clone());
            set.insert(r.new.clone());
        }
        set
    }

    /// Paths Modified or Added in the window — the NEW side for slice
    /// classification and synthesis anchoring.
    pub fn modified_added(&self) -> BTreeSet<NormalizedPath> {
        self.adds.iter().chain(self.mods.iter()).cloned().collect()
    }

    pub fn entry_for(&self, path: &NormalizedPath) -> Option<&ChangeEntry> {
        self.changes.iter().find(|e| e.display_path() == path)
    }

    /// Deterministic serialization: same manifest → byte-identical JSON.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("manifest serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Unescape git's `core.quotepath` C-style quoting. Paths without
/// surrounding double quotes pass through untouched.
pub fn unquote_git_path(raw: &str) -> Result<String, String> {
    if raw.len() < 2 || !raw.starts_with('"') || !raw.ends_with('"') {
        return Ok(raw.to_string());
    }
    let inner = &raw[1..raw.len() - 1];
    let mut bytes = Vec::with_capacity(inner.len());
    let mut chars = inner.bytes().peekable();
    while let Some(b) = chars.next() {
        if b != b'\\' {
            bytes.push(b);
            continue;
        }
        match chars.next() {
            None => return Err("dangling backslash".to_string()),
            Some(b'n') => bytes.push(b'\n'),
            Some(b't') => bytes.push(b'\t'),
            Some(b'r') => bytes.push(b'\r'),
            Some(b'\\') => bytes.push(b'\\'),
            Some(b'"') => bytes.push(b'"'),
            Some(d @ b'0'..=b'7') => {
                let mut value = (d - b'0') as u32;
                for _ in 0..2 {
                    match chars.peek() {
                        Some(o @ b'0'..=b'7') => {
                            value = value * 8 + (*o - b'0') as u32;
                            chars.next();
                        }
                        _ => break,
                    }
                }
                bytes.push(value as u8);
            }
            Some(other) => return Err(format!("unknown escape \\{}", other as char)),
        }
    }
    String::from_utf8(bytes).map_err(|_| "path is not valid UTF-8".to_string())
}

/// Parse `git diff --name-status` text into change entries.
///
/// `Rnnn` lines carry the rename score; `Cnnn` (copy) lines are recorded as
/// adds of the destination path — a copy creates a new head-side artifact
/// without invalidating the source. Unknown status codes are rejected, not
/// skipped.
pub fn parse_name_status(text: &str) -> Result<Vec<ChangeEntry>, ParseError> {
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let status = fields[0];

        let parse_path = |raw: &str| -> Result<NormalizedPath, ParseError> {
            let unquoted = unquote_git_path(raw).map_err(|reason| ParseError::BadQuoting {
                line: lineno,
                path: raw.to_string(),
                reason,
            })?;
            NormalizedPath::parse(&unquoted).ok_or_else(|| ParseError::InvalidPath {
                line: lineno,
                path: raw.to_string(),
            })
        };

        let expect_fields = |expected: usize| -> Result<(), ParseError> {
            if fields.len() != expected {
                Err(ParseError::FieldCount {
                    line: lineno,
                    status: status.to_string(),
                    expected,
                    found: fields.len(),
                })
            } else {
                Ok(())
            }
        };

        let kind = match status {
            "A" => {
                expect_fields(2)?;
                ChangeKind::Added {
                    path: parse_path(fields[1])?,
                }
            }
            "M" => {
                expect_fields(2)?;
                ChangeKind::Modified {
                    path: parse_path(fields[1])?,
                }
            }
            "D" => {
                expect_fields(2)?;
                ChangeKind::Deleted {
                    path: parse_path(fields[1])?,
                }
            }
            s if s.starts_with('R') => {
                expect_fields(3)?;
                let score = RenameScore::parse_code(s).ok_or_else(|| ParseError::BadScore {
                    line: lineno,
                    score: s.to_string(),
                })?;
                let old_path = parse_path(fields[1])?;
                let new_path = parse_path(fields[2])?;
                if old_path == new_path {
                    return Err(ParseError::SelfRename {
                        line: lineno,
                        path: old_path.to_string(),
                    });
                }
                ChangeKind::Renamed {
                    old_path,
                    new_path,
                    score,
                }
            }
            s if s.starts_with('C') => {
                expect_fields(3)?;
                // Validate the score digits even though copies drop them.
                RenameScore::parse_code(&format!("R{}", &s[1..])).ok_or_else(|| {
                    ParseError::BadScore {
                        line: lineno,
                        score: s.to_string(),
                    }
                })?;
                ChangeKind::Added {
                    path: parse_path(fields[2])?,
                }
            }
            other => {
                return Err(ParseError::UnknownStatus {
                    line: lineno,
                    status: other.to_string(),
                })
            }
        };
        entries.push(ChangeEntry::new(kind));
    }
    Ok(entries)
}

/// Assemble the manifest: entries sorted by current-side path, projection
/// lists populated, alias map built. Conflicting claims on the same path
/// (e.g. both M and D) are rejected.
pub fn build_manifest(
    entries: Vec<ChangeEntry>,
    base: &str,
    head: &str,
) -> Result<ChangeManifest, ManifestError> {
    // Any path claimed twice on the same side of the window is a conflict.
    let mut head_side = BTreeSet::new();
    let mut gone_side = BTreeSet::new();
    for entry in &entries {
        match &entry.kind {
            ChangeKind::Added { path } | ChangeKind::Modified { path } => {
                if !head_side.insert(path.clone()) || gone_side.contains(path) {
                    return Err(ManifestError::ConflictingEntries(path.to_string()));
                }
            }
            ChangeKind::Deleted { path } => {
                if !gone_side.insert(path.clone()) || head_side.contains(path) {
                    return Err(ManifestError::ConflictingEntries(path.to_string()));
                }
            }
            ChangeKind::Renamed {
                old_path, new_path, ..
            } => {
                if !gone_side.insert(old_path.clone()) || head_side.contains(old_path) {
                    return Err(ManifestError::ConflictingEntries(old_path.to_string()));
                }
                if !head_side.insert(new_path.clone()) || gone_side.contains(new_path) {
                    return Err(ManifestError::ConflictingEntries(new_path.to_string()));
                }
            }
        }
    }

    let mut changes = entries;
    changes.sort_by(|a, b| a.display_path().cmp(b.display_path()));

    let mut adds = Vec::new();
    let mut mods = Vec::new();
    let mut deletes = Vec::new();
    let mut renames = Vec::new();
    let mut alias_pairs = Vec::new();
    for entry in &changes {
        match &entry.kind {
            ChangeKind::Added { path } => adds.push(path.clone()),
            ChangeKind::Modified { path } => mods.push(path.clone()),
            ChangeKind::Deleted { path } => {
                deletes.push(path.clone());
                alias_pairs.push((path.clone(), AliasTarget::Deleted));
            }
            ChangeKind::Renamed {
                old_path,
                new_path,
                score,
            } => {
                renames.push(RenameRecord {
                    old: old_path.clone(),
                    new: new_path.clone(),
                    score: *score,
                });
                alias_pairs.push((old_path.clone(), AliasTarget::Moved(new_path.clone())));
            }
        }
    }
    let alias_map = AliasMap::build(alias_pairs)?;

    Ok(ChangeManifest {
        base: base.to_string(),
        head: head.to_string(),
        changes,
        alias_map,
        adds,
        mods,
        deletes,
        renames,
    })
}

/// One recorded git invocation, for auditability.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GitInvocation {
    pub command: String,
    pub exit_code: i32,
}

/// Raw output of a window capture: name-status text plus per-file patches.
#[derive(Debug, Clone)]
pub struct WindowCapture {
    pub base_sha: String,
    pub head_sha: String,
    pub name_status: String,
    pub patches: BTreeMap<NormalizedPath, String>,
    pub invocations: Vec<GitInvocation>,
}

pub(crate) fn run_git(repo: &Path, args: &[&str]) -> Result<(String, GitInvocation), GitError> {
    let output = Command::new("git")
        .arg("-c")
        .arg("core.quotepath=false")
        .args(args)
        .current_dir(repo)
        .output()?;
    let invocation = GitInvocation {
        command: format!("git -c core.quotepath=false {}", args.join(" ")),
        exit_code: output.status.code().unwrap_or(-1),
    };
    if !output.status.success() {
        return Err(GitError::CommandFailed {
            args: args.join(" "),
            code: invocation.exit_code,
            stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        });
    }
    let stdout = String::from_utf8(output.stdout).map_err(|_| GitError::InvalidUtf8)?;
    Ok((stdout, invocation))
}

fn resolve_commit(repo: &Path, rev: &str) -> Result<(String, GitInvocation), GitError> {
    let spec = format!("{rev}^{{commit}}");
    match run_git(repo, &["rev-parse", "--verify", &spec]) {
        Ok((out, inv)) => Ok((out.trim().to_string(), inv)),
        Err(GitError::CommandFailed { stderr, .. }) => Err(GitError::RefResolution {
            rev: rev.to_string(),
            stderr,
        }),
        Err(e) => Err(e),
    }
}

/// Capture the window from a live repository: the name-status listing
/// (rename detection on, filter ACMR, plus a separate D pass when deletes
/// are requested) and one unified diff per listed entry. Per-file diffs run
/// with bounded parallelism.
pub fn capture_window(
    w: &WindowRef,
    include_deletes: bool,
    workers: usize,
) -> Result<WindowCapture, GitError> {
    if !w.repo_root.join(".git").exists() {
        // Allow worktrees/submodule layouts where .git is a file, but a
        // missing entry entirely means the path isn't a repository.
        let probe = run_git(&w.repo_root, &["rev-parse", "--show-toplevel"]);
        if probe.is_err() {
            return Err(GitError::NotARepo(w.repo_root.clone()));
        }
    }
    let mut invocations = Vec::new();
    let (base_sha, inv) = resolve_commit(&w.repo_root, &w.base_ref)?;
    invocations.push(inv);
    let (head_sha, inv) = resolve_commit(&w.repo_root, &w.head_ref)?;
    invocations.push(inv);

    let range = format!("{base_sha}..{head_sha}");
    let mut name_status = String::new();
    for filter in ["ACMR"]
        .into_iter()
        .chain(include_deletes.then_some("D"))
    {
        let mut args = vec![
            "diff",
            "--name-status",
            "-M",
            "--diff-filter",
            filter,
            &range,
            "--",
        ];
        args.extend(w.path_globs.iter().map(String::as_str));
        let (out, inv) = run_git(&w.repo_root, &args)?;
        invocations.push(inv);
        name_status.push_str(&out);
    }

    let entries = parse_name_status(&name_status).map_err(|e| GitError::CommandFailed {
        args: "diff --name-status".to_string(),
        code: 0,
        stderr: format!("unparseable name-status output: {e}"),
    })?;

    let patches = Mutex::new(BTreeMap::new());
    let patch_invocations = Mutex::new(Vec::new());
    let errors = Mutex::new(Vec::new());
    let next = AtomicUsize::new(0);
    let workers = workers.max(1).min(entries.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(entry) = entries.get(i) else { break };
                match diff::extract_diff_for_entry(w, &base_sha, &head_sha, entry) {
                    Ok((text, inv)) => {
                        patches
                            .lock()
                            .unwrap()
                            .insert(entry.display_path().clone(), text);
                        patch_invocations.lock().unwrap().push(inv);
                    }
                    Err(e) => errors.lock().unwrap().push(e),
                }
            });
        }
    });
    if let Some(err) = errors.into_inner().unwrap().into_iter().next() {
        return Err(err);
    }
    let mut patch_invocations = patch_invocations.into_inner().unwrap();
    patch_invocations.sort_by(|a, b| a.command.cmp(&b.command));
    invocations.extend(patch_invocations);

    Ok(WindowCapture {
        base_sha,
        head_sha,
        name_status,
        patches: patches.into_inner().unwrap(),
        invocations,
    })
}

/// File name a patch is stored under in a capture directory. Readable prefix
/// plus a content hash of the path so distinct paths never collide.
pub fn patch_file_name(path: &NormalizedPath) -> String {
    use sha2::Digest;
    let digest = sha2::Sha256::digest(path.as_str().as_bytes());
    let hash = hex_prefix(&digest, 8);
    let mut sanitized: String = path
        .as_str()
        .chars()
        .map(|c| if c == '/' { "__".to_string() } else { c.to_string() })
        .collect::<String>();
    if sanitized.len() > 80 {
        sanitized.truncate(80);
    }
    format!("{sanitized}.{hash}.patch")
}

fn hex_prefix(bytes: &[u8], n: usize) -> String {
    bytes.iter().take(n).map(|b| format!("{b:02x}")).collect()
}

/// Write a capture to disk: `name_status.txt`, `patches/` with an index, and
/// the invocation log.
pub fn save_capture(capture: &WindowCapture, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir.join("patches"))?;
    std::fs::write(dir.join("name_status.txt"), &capture.name_status)?;
    std::fs::write(
        dir.join("refs.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "base": capture.base_sha,
            "head": capture.head_sha,
        }))
        .expect("json"),
    )?;
    let mut index = BTreeMap::new();
    for (path, text) in &capture.patches {
        let file = patch_file_name(path);
        std::fs::write(dir.join("patches").join(&file), text)?;
        index.insert(path.as_str().to_string(), file);
    }
    std::fs::write(
        dir.join("patches.json"),
        serde_json::to_string_pretty(&index).expect("json"),
    )?;
    std::fs::write(
        dir.join("invocations.json"),
        serde_json::to_string_pretty(&capture.invocations).expect("json"),
    )?;
    Ok(())
}

/// Load a pre-captured window from a directory written by [`save_capture`]
/// (or assembled by hand: `name_status.txt` plus optional patches). Keeps
/// the whole pipeline runnable without a live repository.
pub fn load_capture(dir: &Path) -> Result<WindowCapture, GitError> {
    let name_status = std::fs::read_to_string(dir.join("name_status.txt"))?;
    let (base_sha, head_sha) = match std::fs::read_to_string(dir.join("refs.json")) {
        Ok(text) => {
            let v: serde_json::Value =
                serde_json::from_str(&text).unwrap_or(serde_json::Value::Null);
            (
                v["base"].as_str().unwrap_or("OFFLINE_BASE").to_string(),
                v["head"].as_str().unwrap_or("OFFLINE_HEAD").to_string(),
            )
        }
        Err(_) => ("OFFLINE_BASE".to_string(), "OFFLINE_HEAD".to_string()),
    };
    let mut patches = BTreeMap::new();
    if let Ok(text) = std::fs::read_to_string(dir.join("patches.json")) {
        let index: BTreeMap<String, String> =
            serde_json::from_str(&text).unwrap_or_default();
        for (path, file) in index {
            if let Some(p) = NormalizedPath::parse(&path) {
                let text = std::fs::read_to_string(dir.join("patches").join(&file))?;
                patches.insert(p, text);
            }
        }
    }
    Ok(WindowCapture {
        base_sha,
        head_sha,
        name_status,
        patches,
        invocations: Vec::new(),
    })
}
