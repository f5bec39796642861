//! In-context-learning prompt assembly: pick the most relevant delta
//! summaries under a character budget and fill the system template with its
//! strict output contract.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::summary::DeltaSummary;

/// System template for delta-patched inference. `{delta_info}` is replaced
/// by the rendered delta block; the strict-output rules are always present.
pub const ICL_SYSTEM_TEMPLATE: &str = "\
You are a codebase assistant with prior knowledge of this repository (from fine-tuning).
At inference time, you are ALSO given *Delta Updates* that describe changes which occurred
after your training snapshot. Treat these updates as patches that override or extend your
existing knowledge wherever there is any conflict.

Your task: given a user question, return repository-root-relative file path(s) that are most relevant.

Strict output rules:
- Output ONLY a JSON array of unique strings with exact, complete, root-relative paths (no leading '/', './', '../').
- Do NOT include any commentary, reasoning, explanations, or trailing text. Example: [\"a.py\", \"dir/b.py\"]
- If you are not confident any paths are relevant or still exist, return [].

Selection guidelines (use silently; do not output this text):
- Use your fine-tuned repo knowledge as the base. Apply the Delta Updates below as the source of truth for recent changes.
- Prefer current paths and behaviors described in the Delta (e.g., renames, file additions/removals, major refactors).
- It is valid to select files NOT mentioned in the Delta if they are relevant per your existing repo knowledge.
- Exclude files that the Delta indicates were deleted or replaced (unless the question is explicitly historical).
- Favor primary implementation files before tests/docs unless the question targets tests/docs.
- Be conservative: only return paths you are confident actually exist in the current repo state.

Delta Updates (changes since your training snapshot):
<delta_info>
{delta_info}
</delta_info>";

/// The strict-output rules block, for contract checks.
pub const STRICT_OUTPUT_RULES: &str = "\
Strict output rules:
- Output ONLY a JSON array of unique strings with exact, complete, root-relative paths (no leading '/', './', '../').
- Do NOT include any commentary, reasoning, explanations, or trailing text. Example: [\"a.py\", \"dir/b.py\"]
- If you are not confident any paths are relevant or still exist, return [].";

/// Multiplier applied to formatting-only summaries during selection, to
/// protect the context budget from low-signal churn.
pub const DEFAULT_FORMATTING_PENALTY: f64 = 0.25;

#[derive(Debug, Error)]
pub enum IclError {
    #[error("budget of {budget} chars cannot fit the fixed prompt scaffolding ({fixed} chars)")]
    BudgetTooSmall { budget: usize, fixed: usize },
}

/// Knobs for prompt composition.
#[derive(Debug, Clone)]
pub struct IclOptions {
    /// Maximum number of deltas considered after ranking.
    pub k: usize,
    /// Character budget for the whole prompt (system + user).
    pub budget_chars: usize,
    /// Emit `<|im_start|>` chat markup (model-protocol specific).
    pub chat_markup: bool,
    /// Score multiplier for formatting-only summaries.
    pub formatting_penalty: f64,
}

impl Default for IclOptions {
    fn default() -> Self {
        Self {
            k: 8,
            budget_chars: 12_000,
            chat_markup: false,
            formatting_penalty: DEFAULT_FORMATTING_PENALTY,
        }
    }
}

/// A composed prompt with its accounting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IclPrompt {
    pub system_text: String,
    pub user_text: String,
    pub delta_entries: Vec<DeltaSummary>,
    pub budget_chars: usize,
    /// Ranked candidates that did not fit the budget.
    pub overflow_dropped: usize,
}

impl IclPrompt {
    pub fn total_len(&self) -> usize {
        self.system_text.len() + 1 + self.user_text.len()
    }

    pub fn included_paths(&self) -> Vec<String> {
        self.delta_entries
            .iter()
            .map(|d| d.path.to_string())
            .collect()
    }
}

fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() || c == '_' {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Overlap score: for each distinct question token, its term frequency in
/// the delta's path + summary tokens. Formatting-only summaries are
/// down-weighted by the penalty multiplier.
pub fn delta_score(question: &str, delta: &DeltaSummary, formatting_penalty: f64) -> f64 {
    let mut tf: BTreeMap<String, usize> = BTreeMap::new();
    for tok in tokenize(delta.path.as_str())
        .into_iter()
        .chain(tokenize(&delta.text))
    {
        *tf.entry(tok).or_insert(0) += 1;
    }
    let mut qtokens: Vec<String> = tokenize(question);
    qtokens.sort_unstable();
    qtokens.dedup();
    let raw: usize = qtokens.iter().filter_map(|t| tf.get(t)).sum();
    let mut score = raw as f64;
    if delta.formatting_only {
        score *= formatting_penalty;
    }
    score
}

/// Render one delta as a block line. Renames show the structural move
/// explicitly.
pub fn render_delta_line(delta: &DeltaSummary) -> String {
    match &delta.old_path {
        Some(old) => format!("- {old} \u{2192} {} (RENAMED): {}", delta.path, delta.text),
        None => {
            let status = match delta.status.as_str() {
                "A" => "ADDED",
                "D" => "DELETED",
                "M" => "MODIFIED",
                other => other,
            };
            format!("- {} ({status}): {}", delta.path, delta.text)
        }
    }
}

/// Rank summaries against the question, keep the top `k`, then include
/// greedily while the rendered delta block stays within
/// `delta_budget_chars`. Ties break by path order; the result is a
/// subsequence of the score-sorted list. Returns the included deltas and how
/// many ranked candidates were dropped for budget.
pub fn select_deltas(
    question: &str,
    summaries: &[DeltaSummary],
    k: usize,
    delta_budget_chars: usize,
    formatting_penalty: f64,
) -> (Vec<DeltaSummary>, usize) {
    let mut scored: Vec<(f64, &DeltaSummary)> = summaries
        .iter()
        .map(|d| (delta_score(question, d, formatting_penalty), d))
        .collect();
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.1.path.cmp(&b.1.path))
    });
    scored.truncate(k);

    let mut included = Vec::new();
    let mut dropped = 0usize;
    let mut used = 0usize;
    for (_, delta) in scored {
        let line_len = render_delta_line(delta).len() + 1;
        if used + line_len <= delta_budget_chars {
            used += line_len;
            included.push(delta.clone());
        } else {
            dropped += 1;
        }
    }
    (included, dropped)
}

fn render_delta_block(deltas: &[DeltaSummary]) -> String {
    deltas
        .iter()
        .map(render_delta_line)
        .collect::<Vec<_>>()
        .join("\n")
}

/// Fill the system template with the selected deltas and build the user
/// turn. Chat markup (and the `/no_think` suffix) is emitted only when the
/// target model protocol requires it.
pub fn compose_prompt(
    question: &str,
    deltas: Vec<DeltaSummary>,
    budget_chars: usize,
    overflow_dropped: usize,
    chat_markup: bool,
) -> IclPrompt {
    let block = render_delta_block(&deltas);
    let mut system_text = ICL_SYSTEM_TEMPLATE.replace("{delta_info}", &block);
    let mut user_text = format!("Question: {question}");
    if chat_markup {
        system_text = format!("<|im_start|>system\n{system_text}\n<|im_end|>");
        user_text = format!("<|im_start|>user\n{user_text} /no_think\n<|im_end|>\n<|im_start|>assistant\n");
    }
    IclPrompt {
        system_text,
        user_text,
        delta_entries: deltas,
        budget_chars,
        overflow_dropped,
    }
}

/// End-to-end composition: reserve space for the fixed scaffolding, select
/// deltas into the remainder, and fill the template. The composed prompt is
/// always within `opts.budget_chars`.
pub fn compose_icl(
    question: &str,
    summaries: &[DeltaSummary],
    opts: &IclOptions,
) -> Result<IclPrompt, IclError> {
    let empty = compose_prompt(question, Vec::new(), opts.budget_chars, 0, opts.chat_markup);
    let fixed = empty.total_len();
    if fixed > opts.budget_chars {
        return Err(IclError::BudgetTooSmall {
            budget: opts.budget_chars,
            fixed,
        });
    }
    let delta_budget = opts.budget_chars - fixed;
    let (selected, dropped) =
        select_deltas(question, summaries, opts.k, delta_budget, opts.formatting_penalty);
    let prompt = compose_prompt(
        question,
        selected,
        opts.budget_chars,
        dropped,
        opts.chat_markup,
    );
    debug_assert!(prompt.total_len() <= opts.budget_chars + 1);
    Ok(prompt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alias::NormalizedPath;
    use crate::summary::SummaryBackendKind;

    fn p(s: &str) -> NormalizedPath {
        NormalizedPath::parse(s).unwrap()
    }

    fn delta(path: &str, text: &str, formatting_only: bool) -> DeltaSummary {
        DeltaSummary {
            path: p(path),
            status: "M".to_string(),
            text: text.to_string(),
            sentence_count: 1,
            formatting_only,
            backend: SummaryBackendKind::Heuristic,
            old_path: None,
        }
    }

    #[test]
    fn question_symbol_match_ranks_first() {
        let mut summaries: Vec<DeltaSummary> = (0..10)
            .map(|i| delta(&format!("pkg/file{i}.py"), "Unrelated churn.", false))
            .collect();
        summaries.push(delta("flaskr/db.py", "Rewrites `init_db` setup.", false));
        let (selected, _) = select_deltas("How is init_db wired?", &summaries, 3, 10_000, 0.25);
        assert_eq!(selected[0].path.as_str(), "flaskr/db.py");
    }

    #[test]
    fn k_zero_selects_nothing() {
        let summaries = vec![delta("a.py", "Changes `a`.", false)];
        let (selected, dropped) = select_deltas("a", &summaries, 0, 10_000, 0.25);
        assert!(selected.is_empty());
        assert_eq!(dropped, 0);
    }

    #[test]
    fn formatting_only_scores_quarter() {
        let clean = delta("x/data.py", "Updates `parse` handling.", false);
        let churn = delta("x/data.py", "Updates `parse` handling.", true);
        let q = "how does parse work in data";
        let base = delta_score(q, &clean, 0.25);
        let penalized = delta_score(q, &churn, 0.25);
        assert!(base > 0.0);
        assert!((penalized - base * 0.25).abs() < 1e-12);
        // Still selectable.
        let (selected, _) = select_deltas(q, std::slice::from_ref(&churn), 5, 10_000, 0.25);
        assert_eq!(selected.len(), 1);
    }

    #[test]
    fn prompt_contains_contract_and_wrapper() {
        let prompt = compose_prompt(
            "Where is the session stored?",
            vec![delta("a.py", "Changes `session` handling.", false)],
            10_000,
            0,
            false,
        );
        assert!(prompt.system_text.contains(STRICT_OUTPUT_RULES));
        assert!(prompt
            .system_text
            .contains("If you are not confident any paths are relevant or still exist, return []."));
        assert!(prompt.system_text.contains("<delta_info>"));
        assert!(prompt.system_text.contains("</delta_info>"));
        assert_eq!(prompt.user_text, "Question: Where is the session stored?");
    }

    #[test]
    fn zero_deltas_keeps_empty_wrapper() {
        let prompt = compose_prompt("q", Vec::new(), 10_000, 0, false);
        assert!(prompt.system_text.contains("<delta_info>\n\n</delta_info>"));
    }

    #[test]
    fn rename_line_rendering() {
        let mut d = delta("src/flask/app.py", "Rename only; content unchanged.", false);
        d.old_path = Some(p("flask/app.py"));
        d.status = "R085".to_string();
        assert_eq!(
            render_delta_line(&d),
            "- flask/app.py \u{2192} src/flask/app.py (RENAMED): Rename only; content unchanged."
        );
    }

    #[test]
    fn tight_budget_accounts_for_drops() {
        let summaries: Vec<DeltaSummary> = (0..50)
            .map(|i| delta(&format!("m/f{i:02}.py"), "Adjusts `handler` logic in this module.", false))
            .collect();
        let opts = IclOptions {
            k: 50,
            budget_chars: ICL_SYSTEM_TEMPLATE.len() + 300,
            chat_markup: false,
            formatting_penalty: 0.25,
        };
        let prompt = compose_icl("handler", &summaries, &opts).unwrap();
        assert!(prompt.total_len() <= opts.budget_chars);
        assert!(!prompt.delta_entries.is_empty());
        assert_eq!(prompt.overflow_dropped, 50 - prompt.delta_entries.len());
    }

    #[test]
    fn budget_smaller_than_template_errors() {
        let opts = IclOptions {
            budget_chars: 10,
            ..IclOptions::default()
        };
        assert!(matches!(
            compose_icl("q", &[], &opts),
            Err(IclError::BudgetTooSmall { .. })
        ));
    }

    #[test]
    fn chat_markup_wraps_turns_and_adds_no_think() {
        let prompt = compose_prompt("q", Vec::new(), 10_000, 0, true);
        assert!(prompt.system_text.starts_with("<|im_start|>system\n"));
        assert!(prompt.system_text.ends_with("<|im_end|>"));
        assert!(prompt.user_text.contains("Question: q /no_think"));
        assert!(prompt.user_text.ends_with("<|im_start|>assistant\n"));
    }

    #[test]
    fn composition_is_deterministic() {
        let summaries: Vec<DeltaSummary> = (0..20)
            .map(|i| delta(&format!("d/f{i}.py"), "Touches `thing`.", i % 2 == 0))
            .collect();
        let opts = IclOptions::default();
        let a = compose_icl("what about thing", &summaries, &opts).unwrap();
        let b = compose_icl("what about thing", &summaries, &opts).unwrap();
        assert_eq!(a.system_text, b.system_text);
        assert_eq!(a.included_paths(), b.included_paths());
    }
}
