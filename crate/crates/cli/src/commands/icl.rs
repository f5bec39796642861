use std::collections::BTreeMap;

use anyhow::{anyhow, Context as _, Result};
use serde::Serialize;

use drift_core::alias::NormalizedPath;
use drift_core::diff::{extract_diff, truncate_diff, DEFAULT_MAX_DIFF_CHARS};
use drift_core::icl::{compose_icl, IclOptions, DEFAULT_FORMATTING_PENALTY};
use drift_core::summary::{DeltaSummary, SummaryBackendKind};
use drift_core::window::{load_capture, ChangeManifest, WindowRef};

use crate::artifact::Provenance;
use crate::commands::Context;
use crate::io::{load_bundle, load_questions, summaries_from_bundle};
use crate::IclArgs;

#[derive(Serialize)]
struct PromptRecord {
    id: String,
    system: String,
    user: String,
    included_paths: Vec<String>,
}

/// Raw-diff delta entries: the window's truncated patches stand in for the
/// summary text, selection logic unchanged.
fn raw_diff_deltas(
    args: &IclArgs,
    manifest: &ChangeManifest,
    max_diff_chars: usize,
) -> Result<Vec<DeltaSummary>> {
    let patches: BTreeMap<NormalizedPath, String> = if let Some(dir) = &args.patches {
        load_capture(dir)
            .with_context(|| format!("loading capture from {}", dir.display()))?
            .patches
    } else {
        let repo = args
            .repo
            .as_ref()
            .ok_or_else(|| anyhow!("--raw-diffs needs --patches or --repo"))?;
        let window = WindowRef::new(repo, &manifest.base, &manifest.head);
        let mut map = BTreeMap::new();
        for entry in &manifest.changes {
            let text = extract_diff(&window, entry.display_path(), entry.old_path())?;
            map.insert(entry.display_path().clone(), text);
        }
        map
    };
    Ok(manifest
        .changes
        .iter()
        .filter_map(|entry| {
            let raw = patches.get(entry.display_path())?;
            Some(DeltaSummary {
                path: entry.display_path().clone(),
                status: entry.status_code(),
                text: truncate_diff(raw, max_diff_chars),
                sentence_count: 0,
                formatting_only: false,
                backend: SummaryBackendKind::Heuristic,
                old_path: entry.old_path().cloned(),
            })
        })
        .collect())
}

pub fn run(ctx: &Context, args: IclArgs) -> Result<()> {
    let opts = IclOptions {
        k: ctx.file_config.usize_or(args.k, "k", 8),
        budget_chars: ctx.file_config.usize_or(args.budget, "budget_chars", 12_000),
        chat_markup: args.chat_markup,
        formatting_penalty: ctx.file_config.f64_or(
            None,
            "formatting_penalty",
            DEFAULT_FORMATTING_PENALTY,
        ),
    };
    let max_diff_chars =
        ctx.file_config
            .usize_or(args.max_diff_chars, "max_diff_chars", DEFAULT_MAX_DIFF_CHARS);

    let manifest = load_bundle(&args.bundle)?;
    let deltas = if args.raw_diffs {
        raw_diff_deltas(&args, &manifest, max_diff_chars)?
    } else {
        let summaries = summaries_from_bundle(&manifest);
        if summaries.is_empty() && !manifest.changes.is_empty() {
            return Err(anyhow!(
                "bundle has no summaries; run `drift summarize` first or pass --raw-diffs"
            ));
        }
        summaries
    };

    let questions: Vec<(String, String)> = match (&args.question, &args.questions) {
        (Some(q), _) => vec![("q1".to_string(), q.clone())],
        (None, Some(path)) => load_questions(path)?,
        (None, None) => unreachable!("clap enforces one question source"),
    };

    let mut out_text = String::new();
    for (id, question) in &questions {
        let prompt = compose_icl(question, &deltas, &opts)?;
        let record = PromptRecord {
            id: id.clone(),
            system: prompt.system_text.clone(),
            user: prompt.user_text.clone(),
            included_paths: prompt.included_paths(),
        };
        out_text.push_str(&serde_json::to_string(&record)?);
        out_text.push('\n');
    }

    let mut prov = Provenance::new(
        "icl",
        serde_json::json!({
            "k": opts.k,
            "budget_chars": opts.budget_chars,
            "raw_diffs": args.raw_diffs,
            "chat_markup": args.chat_markup,
            "formatting_penalty": opts.formatting_penalty,
        }),
    );
    prov.record_input(&args.bundle);
    if let Some(q) = &args.questions {
        prov.record_input(q);
    }
    prov.write_artifact(&args.out, &out_text)?;

    println!(
        "composed {} prompt(s) over {} delta entries -> {}",
        questions.len(),
        deltas.len(),
        args.out.display()
    );
    Ok(())
}
