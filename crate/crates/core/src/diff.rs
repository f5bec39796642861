//! Unified-diff extraction, truncation, and parsing into hunks.
//!
//! Extraction mirrors the capture flags (`-U5 --diff-algorithm=histogram
//! --minimal --ignore-space-at-eol -M`); parsing is deliberately
//! language-light — just hunk arithmetic plus the `@@ … @@ <context>`
//! function headers that feed symbol extraction.

use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

use crate::alias::NormalizedPath;
use crate::window::{run_git, ChangeEntry, ChangeKind, GitError, GitInvocation, WindowRef};

/// Marker line appended when a diff is cut at the character cap.
pub const TRUNCATION_MARKER: &str = "[TRUNCATED]";

/// Default cap on raw diff text fed to summarizers, in characters.
pub const DEFAULT_MAX_DIFF_CHARS: usize = 20_000;

#[derive(Debug, Error)]
pub enum DiffParseError {
    #[error("hunk {hunk}: malformed header {header:?}")]
    BadHunkHeader { hunk: usize, header: String },
    #[error("hunk {hunk}: body has {found} {side} lines but header declares {declared}")]
    CountMismatch {
        hunk: usize,
        side: &'static str,
        declared: u32,
        found: u32,
    },
    #[error("line outside any hunk: {0:?}")]
    StrayLine(String),
}

/// One `@@` hunk of a unified diff.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hunk {
    pub old_start: u32,
    pub old_count: u32,
    pub new_start: u32,
    pub new_count: u32,
    /// Text after the closing `@@` — git's function context.
    pub context_header: String,
    pub added_lines: Vec<String>,
    pub removed_lines: Vec<String>,
    pub context_lines: Vec<String>,
}

/// A parsed per-file unified diff.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UnifiedDiff {
    /// Post-side path when the diff names one.
    pub path: Option<NormalizedPath>,
    /// Pre-side path, retained for renames.
    pub old_path: Option<NormalizedPath>,
    pub hunks: Vec<Hunk>,
    /// Set when the raw text exceeded the configured cap before parsing.
    pub truncated: bool,
    /// Rename metadata was present (`rename from`/`rename to`).
    pub is_rename: bool,
    /// A `Binary files … differ` marker was present.
    pub is_binary: bool,
}

impl UnifiedDiff {
    pub fn added_line_total(&self) -> usize {
        self.hunks.iter().map(|h| h.added_lines.len()).sum()
    }

    pub fn removed_line_total(&self) -> usize {
        self.hunks.iter().map(|h| h.removed_lines.len()).sum()
    }
}

/// Cut a diff at the last complete line within `max_chars` and append the
/// truncation marker. Under the cap the text passes through unchanged. Never
/// splits a line; idempotent at a fixed cap.
pub fn truncate_diff(text: &str, max_chars: usize) -> String {
    if text.len() <= max_chars {
        return text.to_string();
    }
    let cut = text[..max_chars]
        .rfind('\n')
        .map(|i| &text[..=i])
        .unwrap_or("");
    format!("{cut}{TRUNCATION_MARKER}")
}

fn strip_truncation_marker(text: &str) -> (&str, bool) {
    let trimmed = text.trim_end_matches('\n');
    match trimmed.strip_suffix(TRUNCATION_MARKER) {
        Some(rest) => (rest, true),
        None => (text, false),
    }
}

fn hunk_header_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@(?: (.*))?$").expect("valid regex")
    })
}

fn path_from_marker(line: &str, prefix: &str) -> Option<NormalizedPath> {
    let raw = line.strip_prefix(prefix)?.trim();
    if raw == "/dev/null" {
        return None;
    }
    let unquoted = crate::window::unquote_git_path(raw).ok()?;
    let stripped = unquoted
        .strip_prefix("a/")
        .or_else(|| unquoted.strip_prefix("b/"))
        .unwrap_or(&unquoted);
    NormalizedPath::parse(stripped)
}

/// Parse git unified-diff output for a single file. Empty input yields zero
/// hunks; rename-only diffs keep their metadata. Hunk bodies must match the
/// counts declared in each `@@` header, except in the final hunk of a
/// truncated diff, which may be cut short.
pub fn parse_unified_diff(text: &str) -> Result<UnifiedDiff, DiffParseError> {
    let (body, truncated) = strip_truncation_marker(text);
    let mut diff = UnifiedDiff {
        truncated,
        ..UnifiedDiff::default()
    };

    struct Open {
        hunk: Hunk,
        index: usize,
    }
    let mut open: Option<Open> = None;

    fn close(diff: &mut UnifiedDiff, open: Option<Open>, lenient: bool) -> Result<(), DiffParseError> {
        let Some(Open { hunk, index }) = open else {
            return Ok(());
        };
        let old_found = (hunk.removed_lines.len() + hunk.context_lines.len()) as u32;
        let new_found = (hunk.added_lines.len() + hunk.context_lines.len()) as u32;
        if !lenient {
            if old_found != hunk.old_count {
                return Err(DiffParseError::CountMismatch {
                    hunk: index,
                    side: "old",
                    declared: hunk.old_count,
                    found: old_found,
                });
            }
            if new_found != hunk.new_count {
                return Err(DiffParseError::CountMismatch {
                    hunk: index,
                    side: "new",
                    declared: hunk.new_count,
                    found: new_found,
                });
            }
        }
        diff.hunks.push(hunk);
        Ok(())
    }

    let mut hunk_index = 0usize;
    for line in body.lines() {
        if let Some(caps) = hunk_header_re().captures(line) {
            close(&mut diff, open.take(), false)?;
            hunk_index += 1;
            let parse_num = |i: usize, default: u32| {
                caps.get(i)
                    .map(|m| m.as_str().parse::<u32>().unwrap_or(default))
                    .unwrap_or(default)
            };
            open = Some(Open {
                hunk: Hunk {
                    old_start: parse_num(1, 0),
                    old_count: parse_num(2, 1),
                    new_start: parse_num(3, 0),
                    new_count: parse_num(4, 1),
                    context_header: caps.get(5).map(|m| m.as_str().to_string()).unwrap_or_default(),
                    added_lines: Vec::new(),
                    removed_lines: Vec::new(),
                    context_lines: Vec::new(),
                },
                index: hunk_index,
            });
            continue;
        }
        if line.starts_with("@@") {
            return Err(DiffParseError::BadHunkHeader {
                hunk: hunk_index + 1,
                header: line.to_string(),
            });
        }

        if let Some(o) = open.as_mut() {
            match line.chars().next() {
                Some('+') => {
                    o.hunk.added_lines.push(line[1..].to_string());
                    continue;
                }
                Some('-') => {
                    o.hunk.removed_lines.push(line[1..].to_string());
                    continue;
                }
                Some(' ') => {
                    o.hunk.context_lines.push(line[1..].to_string());
                    continue;
                }
                Some('\\') => continue, // "\ No newline at end of file"
                None => {
                    // Some tools emit a bare empty line for empty context.
                    o.hunk.context_lines.push(String::new());
                    continue;
                }
                _ => {
                    // Falls through to the header handling below (a new
                    // `diff --git` section terminates the hunk).
                    close(&mut diff, open.take(), false)?;
                }
            }
        }

        if let Some(rest) = line.strip_prefix("rename from ") {
            diff.is_rename = true;
            if diff.old_path.is_none() {
                diff.old_path = NormalizedPath::parse(rest);
            }
        } else if let Some(rest) = line.strip_prefix("rename to ") {
            diff.is_rename = true;
            if diff.path.is_none() {
                diff.path = NormalizedPath::parse(rest);
            }
        } else if line.starts_with("--- ") {
            if diff.old_path.is_none() {
                diff.old_path = path_from_marker(line, "--- ");
            }
        } else if line.starts_with("+++ ") {
            if diff.path.is_none() {
                diff.path = path_from_marker(line, "+++ ");
            }
        } else if line.starts_with("Binary files ") {
            diff.is_binary = true;
        } else if line.starts_with("diff --git ")
            || line.starts_with("index ")
            || line.starts_with("similarity index ")
            || line.starts_with("dissimilarity index ")
            || line.starts_with("new file mode ")
            || line.starts_with("deleted file mode ")
            || line.starts_with("old mode ")
            || line.starts_with("new mode ")
            || line.starts_with("copy from ")
            || line.starts_with("copy to ")
            || line.is_empty()
        {
            // Header and metadata lines carry nothing we need beyond the
            // rename/path markers handled above.
        } else {
            return Err(DiffParseError::StrayLine(line.to_string()));
        }
    }
    close(&mut diff, open.take(), truncated)?;

    // A delete has no post-side path; fall back so `path` names the file.
    if diff.path.is_none() {
        diff.path = diff.old_path.clone();
    }
    Ok(diff)
}

fn symbol_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\b(?:def|class|fn|func|function)\s+([A-Za-z_][A-Za-z0-9_]*)")
            .expect("valid regex")
    })
}

/// Candidate symbol names: function-context headers plus a keyword scan of
/// added/removed lines. First-occurrence order, deduplicated.
pub fn extract_symbols(diff: &UnifiedDiff) -> Vec<String> {
    let mut seen = std::collections::BTreeSet::new();
    let mut symbols = Vec::new();
    let mut push = |name: &str| {
        if seen.insert(name.to_string()) {
            symbols.push(name.to_string());
        }
    };
    for hunk in &diff.hunks {
        for caps in symbol_re().captures_iter(&hunk.context_header) {
            push(&caps[1]);
        }
        for line in hunk.removed_lines.iter().chain(hunk.added_lines.iter()) {
            for caps in symbol_re().captures_iter(line) {
                push(&caps[1]);
            }
        }
    }
    symbols
}

/// Top-level symbol definitions in whole-file content (no leading
/// indentation), for full-file question synthesis.
pub fn scan_top_level_symbols(content: &str) -> Vec<String> {
    let mut seen = std::collections::BTreeSet::new();
    let mut symbols = Vec::new();
    for line in content.lines() {
        if line.starts_with(char::is_whitespace) {
            continue;
        }
        if let Some(caps) = symbol_re().captures(line) {
            // Only definitions that start the line (modifiers allowed).
            let name = caps[1].to_string();
            if seen.insert(name.clone()) {
                symbols.push(name);
            }
        }
    }
    symbols
}

const DIFF_FLAGS: &[&str] = &[
    "-U5",
    "--diff-algorithm=histogram",
    "--minimal",
    "--ignore-space-at-eol",
    "-M",
];

/// Extract the unified diff for one path of the window, verbatim from git.
pub fn extract_diff(
    w: &WindowRef,
    path: &NormalizedPath,
    old_path: Option<&NormalizedPath>,
) -> Result<String, GitError> {
    let range = format!("{}..{}", w.base_ref, w.head_ref);
    let mut args = vec!["diff"];
    args.extend_from_slice(DIFF_FLAGS);
    args.push(&range);
    args.push("--");
    if let Some(old) = old_path {
        args.push(old.as_str());
    }
    args.push(path.as_str());
    let (out, _) = run_git(&w.repo_root, &args)?;
    Ok(out)
}

pub(crate) fn extract_diff_for_entry(
    w: &WindowRef,
    base_sha: &str,
    head_sha: &str,
    entry: &ChangeEntry,
) -> Result<(String, GitInvocation), GitError> {
    let range = format!("{base_sha}..{head_sha}");
    let mut args = vec!["diff"];
    args.extend_from_slice(DIFF_FLAGS);
    args.push(&range);
    args.push("--");
    let (path, old) = match &entry.kind {
        ChangeKind::Renamed {
            old_path, new_path, ..
        } => (new_path, Some(old_path)),
        other => (
            match other {
                ChangeKind::Added { path }
                | ChangeKind::Modified { path }
                | ChangeKind::Deleted { path } => path,
                ChangeKind::Renamed { .. } => unreachable!(),
            },
            None,
        ),
    };
    if let Some(old) = old {
        args.push(old.as_str());
    }
    args.push(path.as_str());
    run_git(&w.repo_root, &args)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
diff --git a/flaskr/db.py b/flaskr/db.py
index 111..222 100644
--- a/flaskr/db.py
+++ b/flaskr/db.py
@@ -10,3 +10,4 @@ def init_db():
 context one
-removed line
+added line
+second added
 context two
";

    #[test]
    fn parse_sample_hunk() {
        let diff = parse_unified_diff(SAMPLE).unwrap();
        assert_eq!(diff.path.as_ref().unwrap().as_str(), "flaskr/db.py");
        assert_eq!(diff.hunks.len(), 1);
        let h = &diff.hunks[0];
        assert_eq!((h.old_start, h.old_count, h.new_start, h.new_count), (10, 3, 10, 4));
        assert_eq!(h.context_header, "def init_db():");
        assert_eq!(h.removed_lines, vec!["removed line"]);
        assert_eq!(h.added_lines, vec!["added line", "second added"]);
        assert!(!diff.truncated);
    }

    #[test]
    fn parse_empty_text() {
        let diff = parse_unified_diff("").unwrap();
        assert!(diff.hunks.is_empty());
        assert!(diff.path.is_none());
    }

    #[test]
    fn parse_rename_only_diff() {
        let text = "\
diff --git a/flask/app.py b/src/flask/app.py
similarity index 100%
rename from flask/app.py
rename to src/flask/app.py
";
        let diff = parse_unified_diff(text).unwrap();
        assert!(diff.hunks.is_empty());
        assert!(diff.is_rename);
        assert_eq!(diff.old_path.as_ref().unwrap().as_str(), "flask/app.py");
        assert_eq!(diff.path.as_ref().unwrap().as_str(), "src/flask/app.py");
    }

    #[test]
    fn parse_rejects_count_mismatch() {
        let text = "\
--- a/x.py
+++ b/x.py
@@ -1,2 +1,2 @@
 only one context line
";
        let err = parse_unified_diff(text).unwrap_err();
        assert!(matches!(err, DiffParseError::CountMismatch { hunk: 1, .. }));
    }

    #[test]
    fn parse_pure_addition() {
        let text = "\
diff --git a/new.py b/new.py
new file mode 100644
--- /dev/null
+++ b/new.py
@@ -0,0 +1,2 @@
+def hello():
+    return 1
";
        let diff = parse_unified_diff(text).unwrap();
        assert_eq!(diff.hunks.len(), 1);
        assert_eq!(diff.hunks[0].old_count, 0);
        assert_eq!(diff.hunks[0].added_lines.len(), 2);
        assert_eq!(diff.path.as_ref().unwrap().as_str(), "new.py");
    }

    #[test]
    fn truncate_under_cap_is_identity() {
        let text = "a\nb\nc\n";
        assert_eq!(truncate_diff(text, 20_000), text);
    }

    #[test]
    fn truncate_never_splits_lines_and_is_idempotent() {
        let mut text = String::new();
        for i in 0..1000 {
            text.push_str(&format!("line number {i} with some padding\n"));
        }
        let cap = 20_000;
        let long = text.repeat(3);
        assert!(long.len() > cap);
        let cut = truncate_diff(&long, cap);
        assert!(cut.ends_with(TRUNCATION_MARKER));
        assert!(cut.len() <= cap + TRUNCATION_MARKER.len());
        let before_marker = &cut[..cut.len() - TRUNCATION_MARKER.len()];
        assert!(before_marker.is_empty() || before_marker.ends_with('\n'));
        assert!(long.starts_with(before_marker));
        assert_eq!(truncate_diff(&cut, cap), cut);
    }

    #[test]
    fn truncate_degenerate_cap_yields_marker_only() {
        assert_eq!(truncate_diff("some diff text", 1), TRUNCATION_MARKER);
    }

    #[test]
    fn parse_tolerates_short_final_hunk_when_truncated() {
        let text = format!(
            "--- a/x.py\n+++ b/x.py\n@@ -1,5 +1,5 @@\n context\n-gone\n{TRUNCATION_MARKER}"
        );
        let diff = parse_unified_diff(&text).unwrap();
        assert!(diff.truncated);
        assert_eq!(diff.hunks.len(), 1);
    }

    #[test]
    fn symbols_from_context_header_and_lines() {
        let text = "\
--- a/flaskr/db.py
+++ b/flaskr/db.py
@@ -1,1 +1,3 @@ def init_db():
 pass
+def get_db():
+    pass
";
        let diff = parse_unified_diff(text).unwrap();
        assert_eq!(extract_symbols(&diff), vec!["init_db", "get_db"]);
    }

    #[test]
    fn top_level_symbol_scan_skips_indented() {
        let content = "def top():\n    def inner():\n        pass\nclass Thing:\n    pass\n";
        assert_eq!(scan_top_level_symbols(content), vec!["top", "Thing"]);
    }
}
