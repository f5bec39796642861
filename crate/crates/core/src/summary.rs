//! English delta summaries for changed files.
//!
//! Two backends: a chat-completion service driven by the reviewer prompt,
//! and a deterministic heuristic that needs no network. The service backend
//! falls back to the heuristic on transport failure or when a reply violates
//! the sentence bound after one retry.

use serde::{Deserialize, Serialize};

use crate::alias::NormalizedPath;
use crate::diff::{extract_symbols, UnifiedDiff};
use crate::service::{ChatClient, ServiceError};
use crate::window::{ChangeEntry, ChangeKind};

/// Reviewer prompt for diff → English summarization.
pub const SUMMARIZER_SYSTEM_PROMPT: &str = "\
You are a senior software engineer helping with code review.
You'll be given a unified git diff for a SINGLE file and its file path(s).
Explain in 3\u{2013}5 short sentences what the change does. Name affected functions/classes/configs.
Avoid speculation; if unclear or formatting-only, say so.";

/// Sampling temperature for summarization requests.
pub const SUMMARIZER_TEMPERATURE: f32 = 0.2;

/// Which backend produced a summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummaryBackendKind {
    Service,
    Heuristic,
}

/// Backend selection for [`summarize`].
pub enum SummarizerBackend<'a> {
    Heuristic,
    Service(&'a ChatClient),
}

/// A 1–5 sentence English description of one file's change.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaSummary {
    pub path: NormalizedPath,
    /// Status code as carried in the bundle (`A`, `M`, `D`, or `Rnnn`).
    pub status: String,
    pub text: String,
    pub sentence_count: usize,
    pub formatting_only: bool,
    pub backend: SummaryBackendKind,
    /// Pre-window path for renames; drives the `old → new` rendering.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old_path: Option<NormalizedPath>,
}

/// Count sentences by splitting on `.`, `!`, or `?` followed by whitespace
/// (or end of text). Segments without any alphanumeric content don't count.
pub fn count_sentences(text: &str) -> usize {
    let chars: Vec<char> = text.chars().collect();
    let mut count = 0;
    let mut segment_has_content = false;
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            segment_has_content = true;
        }
        let is_terminator = matches!(c, '.' | '!' | '?');
        let at_boundary =
            is_terminator && chars.get(i + 1).is_none_or(|n| n.is_whitespace());
        if at_boundary && segment_has_content {
            count += 1;
            segment_has_content = false;
        }
    }
    if segment_has_content {
        count += 1;
    }
    count
}

/// Strip everything that should not count as a functional difference:
/// comment tails, quote style, and all whitespace.
fn normalize_functional(line: &str) -> String {
    let mut code = line;
    for marker in ["#", "//"] {
        if let Some(idx) = code.find(marker) {
            code = &code[..idx];
        }
    }
    code.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| if c == '\'' { '"' } else { c })
        .collect()
}

/// True when every hunk's removed and added lines agree after dropping
/// whitespace, quote-style, and comment differences. Pure additions or
/// removals of blank/comment lines still qualify.
pub fn is_formatting_only(diff: &UnifiedDiff) -> bool {
    if diff.hunks.is_empty() {
        return false;
    }
    diff.hunks.iter().all(|hunk| {
        let removed: Vec<String> = hunk
            .removed_lines
            .iter()
            .map(|l| normalize_functional(l))
            .filter(|l| !l.is_empty())
            .collect();
        let added: Vec<String> = hunk
            .added_lines
            .iter()
            .map(|l| normalize_functional(l))
            .filter(|l| !l.is_empty())
            .collect();
        removed == added
    })
}

fn backtick_list(symbols: &[String], limit: usize) -> String {
    symbols
        .iter()
        .take(limit)
        .map(|s| format!("`{s}`"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Deterministic summary: hunk count, touched symbols, line totals, and an
/// explicit no-functional-change statement when the diff is pure formatting.
pub fn heuristic_summary(entry: &ChangeEntry, diff: &UnifiedDiff) -> (String, bool) {
    match &entry.kind {
        ChangeKind::Deleted { path } => (
            format!("Deleted file: {path} no longer exists at the head snapshot. Any references to it must move elsewhere."),
            false,
        ),
        ChangeKind::Renamed { old_path, .. } if diff.is_binary => (
            format!("Renamed from {old_path}; binary content changed."),
            false,
        ),
        _ if diff.is_binary => ("Binary content changed; line-level diffing does not apply.".to_string(), false),
        ChangeKind::Renamed { .. } if diff.hunks.is_empty() => {
            ("Rename only; content unchanged.".to_string(), false)
        }
        ChangeKind::Modified { .. } if diff.hunks.is_empty() => (
            "No content hunks after whitespace-trimmed diffing; formatting-only change; no functional change.".to_string(),
            true,
        ),
        kind => {
            let symbols = extract_symbols(diff);
            let hunks = diff.hunks.len();
            let added = diff.added_line_total();
            let removed = diff.removed_line_total();
            let formatting_only = matches!(
                kind,
                ChangeKind::Modified { .. } | ChangeKind::Renamed { .. }
            ) && is_formatting_only(diff);

            let mut sentences = Vec::new();
            match kind {
                ChangeKind::Added { .. } => {
                    sentences.push(format!("New file with {added} added lines in {hunks} hunk(s)."));
                }
                ChangeKind::Renamed { old_path, .. } => {
                    sentences.push(format!(
                        "Renamed from {old_path} with {hunks} content hunk(s): {added} lines added, {removed} removed."
                    ));
                }
                _ => {
                    sentences.push(format!(
                        "Touches {hunks} hunk(s): {added} lines added, {removed} removed."
                    ));
                }
            }
            if formatting_only {
                sentences.push("Formatting-only change; no functional change.".to_string());
            } else if !symbols.is_empty() {
                sentences.push(format!("Involves {}.", backtick_list(&symbols, 6)));
            }
            (sentences.join(" "), formatting_only)
        }
    }
}

fn is_trivial_change(entry: &ChangeEntry, diff: &UnifiedDiff) -> bool {
    matches!(entry.kind, ChangeKind::Deleted { .. }) || diff.hunks.is_empty()
}

fn build_heuristic(entry: &ChangeEntry, diff: &UnifiedDiff) -> DeltaSummary {
    let (text, formatting_only) = heuristic_summary(entry, diff);
    DeltaSummary {
        path: entry.display_path().clone(),
        status: entry.status_code(),
        sentence_count: count_sentences(&text),
        text,
        formatting_only,
        backend: SummaryBackendKind::Heuristic,
        old_path: entry.old_path().cloned(),
    }
}

fn service_user_message(entry: &ChangeEntry, raw_diff: &str) -> String {
    let path_line = match &entry.kind {
        ChangeKind::Renamed {
            old_path, new_path, ..
        } => format!("{old_path} -> {new_path}"),
        _ => entry.display_path().to_string(),
    };
    format!("- path: {path_line}\n- unified_diff: ```patch\n{raw_diff}\n```")
}

/// Summarize one change. The service backend sends the reviewer prompt and
/// accepts a 3–5 sentence reply (1–2 tolerated for trivial diffs); a reply
/// violating the bound is retried once, then the heuristic takes over. A
/// transport failure also falls back to the heuristic, recorded as such.
pub fn summarize(
    entry: &ChangeEntry,
    diff: &UnifiedDiff,
    raw_diff: &str,
    backend: &SummarizerBackend<'_>,
) -> DeltaSummary {
    let client = match backend {
        SummarizerBackend::Heuristic => return build_heuristic(entry, diff),
        SummarizerBackend::Service(client) => client,
    };
    let user = service_user_message(entry, raw_diff);
    let trivial = is_trivial_change(entry, diff);
    for _ in 0..2 {
        match client.complete(SUMMARIZER_SYSTEM_PROMPT, &user, SUMMARIZER_TEMPERATURE) {
            Ok(reply) => {
                let reply = reply.trim().to_string();
                let sentences = count_sentences(&reply);
                let within_bound =
                    (3..=5).contains(&sentences) || (trivial && (1..=2).contains(&sentences));
                if within_bound {
                    let formatting_only = reply.to_lowercase().contains("no functional change");
                    return DeltaSummary {
                        path: entry.display_path().clone(),
                        status: entry.status_code(),
                        text: reply,
                        sentence_count: sentences,
                        formatting_only,
                        backend: SummaryBackendKind::Service,
                        old_path: entry.old_path().cloned(),
                    };
                }
            }
            Err(ServiceError::Transport(_)) | Err(ServiceError::Io(_)) => break,
            Err(_) => break,
        }
    }
    build_heuristic(entry, diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::parse_unified_diff;
    use crate::window::parse_name_status;
    use std::time::Duration;

    fn entry(line: &str) -> ChangeEntry {
        parse_name_status(line).unwrap().remove(0)
    }

    #[test]
    fn sentence_counting() {
        assert_eq!(count_sentences("One. Two! Three?"), 3);
        assert_eq!(count_sentences("No terminator at all"), 1);
        assert_eq!(count_sentences("Version 3.5 changed. Done."), 2);
        assert_eq!(count_sentences(""), 0);
    }

    #[test]
    fn quote_style_change_is_formatting_only() {
        let text = "\
--- a/examples/tutorial/flaskr/db.py
+++ b/examples/tutorial/flaskr/db.py
@@ -1,3 +1,3 @@
 import sqlite3
-db = connect('app.db')
+db = connect(\"app.db\")
 pass
";
        let diff = parse_unified_diff(text).unwrap();
        let e = entry("M\texamples/tutorial/flaskr/db.py");
        let summary = summarize(&e, &diff, text, &SummarizerBackend::Heuristic);
        assert!(summary.formatting_only);
        assert!(summary.text.contains("no functional change"));
    }

    #[test]
    fn reindent_is_formatting_only() {
        let text = "\
--- a/x.py
+++ b/x.py
@@ -1,2 +1,2 @@
-def f():
- return 1
+def f():
+    return 1
";
        let diff = parse_unified_diff(text).unwrap();
        assert!(is_formatting_only(&diff));
    }

    #[test]
    fn behavioral_change_is_not_formatting_only() {
        let text = "\
--- a/x.py
+++ b/x.py
@@ -1,1 +1,1 @@
-return a + b
+return a - b
";
        let diff = parse_unified_diff(text).unwrap();
        assert!(!is_formatting_only(&diff));
    }

    #[test]
    fn deleted_file_summary_states_deletion() {
        let e = entry("D\tflask/__init__.py");
        let summary = summarize(
            &e,
            &UnifiedDiff::default(),
            "",
            &SummarizerBackend::Heuristic,
        );
        assert!(summary.text.contains("Deleted file"));
        assert!(summary.sentence_count >= 1);
    }

    #[test]
    fn rename_only_summary() {
        let e = entry("R100\tflask/app.py\tsrc/flask/app.py");
        let summary = summarize(
            &e,
            &UnifiedDiff::default(),
            "",
            &SummarizerBackend::Heuristic,
        );
        assert_eq!(summary.text, "Rename only; content unchanged.");
        assert_eq!(summary.sentence_count, 1);
        assert_eq!(summary.old_path.as_ref().unwrap().as_str(), "flask/app.py");
    }

    #[test]
    fn suppressed_eol_whitespace_diff_is_formatting_only() {
        // --ignore-space-at-eol yields an empty body for EOL-only churn.
        let e = entry("M\tws.py");
        let summary = summarize(
            &e,
            &UnifiedDiff::default(),
            "",
            &SummarizerBackend::Heuristic,
        );
        assert!(summary.formatting_only);
        assert!(summary.text.contains("no functional change"));
    }

    #[test]
    fn binary_change_is_not_formatting_only() {
        let text = "\
diff --git a/logo.png b/logo.png
index 111..222 100644
Binary files a/logo.png and b/logo.png differ
";
        let diff = parse_unified_diff(text).unwrap();
        assert!(diff.is_binary);
        let e = entry("M\tlogo.png");
        let summary = summarize(&e, &diff, text, &SummarizerBackend::Heuristic);
        assert!(!summary.formatting_only);
        assert!(summary.text.contains("Binary"));
    }

    #[test]
    fn heuristic_is_deterministic() {
        let text = "\
--- a/m.py
+++ b/m.py
@@ -1,1 +1,3 @@ def init_db():
 pass
+def get_db():
+    pass
";
        let diff = parse_unified_diff(text).unwrap();
        let e = entry("M\tm.py");
        let a = summarize(&e, &diff, text, &SummarizerBackend::Heuristic);
        let b = summarize(&e, &diff, text, &SummarizerBackend::Heuristic);
        assert_eq!(a, b);
        assert!(a.text.contains("`init_db`"));
        assert!(a.text.contains("`get_db`"));
        assert!((1..=5).contains(&a.sentence_count));
    }

    #[test]
    fn service_falls_back_to_heuristic_when_unreachable() {
        let dir = tempfile::tempdir().unwrap();
        let client = ChatClient {
            endpoint: "http://127.0.0.1:1/nowhere".to_string(),
            model: "m".to_string(),
            api_key: None,
            cache_dir: Some(dir.path().to_path_buf()),
            timeout: Duration::from_millis(100),
            max_retries: 0,
        };
        let e = entry("M\tm.py");
        let text = "\
--- a/m.py
+++ b/m.py
@@ -1,1 +1,1 @@
-a
+b
";
        let diff = parse_unified_diff(text).unwrap();
        let summary = summarize(&e, &diff, text, &SummarizerBackend::Service(&client));
        assert_eq!(summary.backend, SummaryBackendKind::Heuristic);
    }

    #[test]
    fn service_uses_cached_reply() {
        let dir = tempfile::tempdir().unwrap();
        let client = ChatClient {
            endpoint: "http://127.0.0.1:1/nowhere".to_string(),
            model: "m".to_string(),
            api_key: None,
            cache_dir: Some(dir.path().to_path_buf()),
            timeout: Duration::from_millis(100),
            max_retries: 0,
        };
        let e = entry("M\tm.py");
        let text = "\
--- a/m.py
+++ b/m.py
@@ -1,1 +1,1 @@
-a
+b
";
        let diff = parse_unified_diff(text).unwrap();
        let user = service_user_message(&e, text);
        client
            .prime_cache(
                SUMMARIZER_SYSTEM_PROMPT,
                &user,
                SUMMARIZER_TEMPERATURE,
                "Replaces the constant. Adjusts the caller. Keeps the interface stable.",
            )
            .unwrap();
        let summary = summarize(&e, &diff, text, &SummarizerBackend::Service(&client));
        assert_eq!(summary.backend, SummaryBackendKind::Service);
        assert_eq!(summary.sentence_count, 3);
    }

    #[test]
    fn service_reply_violating_bound_falls_back() {
        let dir = tempfile::tempdir().unwrap();
        let client = ChatClient {
            endpoint: "http://127.0.0.1:1/nowhere".to_string(),
            model: "m".to_string(),
            api_key: None,
            cache_dir: Some(dir.path().to_path_buf()),
            timeout: Duration::from_millis(100),
            max_retries: 0,
        };
        let e = entry("M\tm.py");
        let text = "\
--- a/m.py
+++ b/m.py
@@ -1,1 +1,1 @@
-a
+b
";
        let diff = parse_unified_diff(text).unwrap();
        let user = service_user_message(&e, text);
        // A non-trivial diff with a 1-sentence reply violates the bound.
        client
            .prime_cache(
                SUMMARIZER_SYSTEM_PROMPT,
                &user,
                SUMMARIZER_TEMPERATURE,
                "Too short.",
            )
            .unwrap();
        let summary = summarize(&e, &diff, text, &SummarizerBackend::Service(&client));
        assert_eq!(summary.backend, SummaryBackendKind::Heuristic);
    }
}
