use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{anyhow, bail, Context as _, Result};

use drift_core::alias::NormalizedPath;
use drift_core::diff::{extract_diff, parse_unified_diff, truncate_diff, DEFAULT_MAX_DIFF_CHARS};
use drift_core::service::ChatClient;
use drift_core::summary::{summarize, SummarizerBackend};
use drift_core::window::{load_capture, ChangeEntry, WindowRef};

use crate::artifact::Provenance;
use crate::commands::Context;
use crate::io::load_bundle;
use crate::SummarizeArgs;

/// Raw diff texts for the bundle's entries, from a pre-captured directory or
/// a live repository.
fn collect_raw_diffs(
    args: &SummarizeArgs,
    manifest: &drift_core::window::ChangeManifest,
) -> Result<BTreeMap<NormalizedPath, String>> {
    if let Some(dir) = &args.patches {
        let capture = load_capture(dir)
            .with_context(|| format!("loading capture from {}", dir.display()))?;
        return Ok(capture.patches);
    }
    let repo = args
        .repo
        .as_ref()
        .ok_or_else(|| anyhow!("either --repo or --patches is required"))?;
    let window = WindowRef::new(repo, &manifest.base, &manifest.head);
    let mut patches = BTreeMap::new();
    for entry in &manifest.changes {
        let text = extract_diff(&window, entry.display_path(), entry.old_path())?;
        patches.insert(entry.display_path().clone(), text);
    }
    Ok(patches)
}

pub fn run(ctx: &Context, args: SummarizeArgs) -> Result<()> {
    let backend_name = ctx
        .file_config
        .string_or(args.backend.clone(), "backend", "heuristic");
    let max_diff_chars = ctx.file_config.usize_or(
        args.max_diff_chars,
        "max_diff_chars",
        DEFAULT_MAX_DIFF_CHARS,
    );
    let workers = ctx.file_config.usize_or(args.workers, "workers", 4);

    let mut manifest = load_bundle(&args.bundle)?;
    let raw_diffs = collect_raw_diffs(&args, &manifest)?;

    let client = match backend_name.as_str() {
        "heuristic" => None,
        "service" => Some(ChatClient::from_env()?.with_cache_dir(args.cache.clone())),
        other => bail!("unknown backend {other:?} (expected service or heuristic)"),
    };

    // Summaries are produced in parallel (service calls dominate), then
    // merged back in entry order.
    let texts = Mutex::new(BTreeMap::new());
    let failures = Mutex::new(Vec::new());
    let next = AtomicUsize::new(0);
    let entries: Vec<&ChangeEntry> = manifest.changes.iter().collect();
    let worker_count = workers.max(1).min(entries.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..worker_count {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(entry) = entries.get(i) else { break };
                let raw = raw_diffs
                    .get(entry.display_path())
                    .map(String::as_str)
                    .unwrap_or("");
                let truncated = truncate_diff(raw, max_diff_chars);
                let parsed = match parse_unified_diff(&truncated) {
                    Ok(d) => d,
                    Err(e) => {
                        failures
                            .lock()
                            .unwrap()
                            .push(anyhow!("{}: {e}", entry.display_path()));
                        return;
                    }
                };
                let backend = match &client {
                    Some(c) => SummarizerBackend::Service(c),
                    None => SummarizerBackend::Heuristic,
                };
                let summary = summarize(entry, &parsed, &truncated, &backend);
                texts
                    .lock()
                    .unwrap()
                    .insert(entry.display_path().clone(), summary.text);
            });
        }
    });
    if let Some(err) = failures.into_inner().unwrap().into_iter().next() {
        return Err(err.context("parsing a per-file diff"));
    }

    let texts = texts.into_inner().unwrap();
    let mut summarized = 0usize;
    for entry in &mut manifest.changes {
        if let Some(text) = texts.get(entry.display_path()) {
            entry.summary = Some(text.clone());
            summarized += 1;
        }
    }

    let out = args.out.clone().unwrap_or_else(|| args.bundle.clone());
    let mut prov = Provenance::new(
        "summarize",
        serde_json::json!({
            "backend": backend_name,
            "max_diff_chars": max_diff_chars,
            "workers": workers,
            "cache": args.cache.as_ref().map(|p| p.display().to_string()),
        }),
    );
    prov.record_input(&args.bundle);
    prov.write_artifact(&out, &manifest.to_json())?;

    println!(
        "summarized {summarized}/{} entries ({backend_name}) -> {}",
        manifest.changes.len(),
        out.display()
    );
    Ok(())
}
