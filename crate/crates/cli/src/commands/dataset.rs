use std::path::Path;
use std::process::Command;

use anyhow::{anyhow, bail, Context as _, Result};

use drift_core::dataset::{
    filter_old_pool, mix, read_jsonl, synth_new_from_diff, synth_new_from_file, validate_labels,
    write_jsonl, MixRecipe, Origin, QAExample, Rejection, SynthBackend,
};
use drift_core::service::ChatClient;
use drift_core::window::ChangeManifest;

use crate::artifact::Provenance;
use crate::commands::Context;
use crate::io::{load_bundle, load_snapshot, summaries_from_bundle};
use crate::DatasetArgs;

fn file_content_at_head(
    repo: Option<&Path>,
    contents_dir: Option<&Path>,
    head: &str,
    path: &drift_core::alias::NormalizedPath,
) -> Result<String> {
    if let Some(dir) = contents_dir {
        return std::fs::read_to_string(dir.join(path.as_str()))
            .with_context(|| format!("reading {} under {}", path, dir.display()));
    }
    let repo = repo.ok_or_else(|| {
        anyhow!("full-file mode needs --repo or --contents to read file content at the head")
    })?;
    let output = Command::new("git")
        .args(["show", &format!("{head}:{path}")])
        .current_dir(repo)
        .output()
        .context("running git show")?;
    if !output.status.success() {
        bail!(
            "git show {head}:{path} failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
    String::from_utf8(output.stdout).map_err(|_| anyhow!("{path} is not valid UTF-8 at {head}"))
}

fn synth_new_pool(
    args: &DatasetArgs,
    manifest: &ChangeManifest,
    backend: &SynthBackend<'_>,
    target: usize,
    max_files_per_q: usize,
) -> Result<(Vec<QAExample>, usize, usize)> {
    let mut pool = Vec::new();
    let mut dropped = 0usize;
    let mut skipped = 0usize;
    match args.mode.as_str() {
        "git-diff" => {
            let summaries = summaries_from_bundle(manifest);
            for entry in &manifest.changes {
                if !entry.is_new_anchor() {
                    continue;
                }
                let path = entry.display_path();
                let summary = summaries
                    .iter()
                    .find(|s| &s.path == path)
                    .ok_or_else(|| {
                        anyhow!("{path} has no summary; run `drift summarize` on the bundle first")
                    })?;
                let outcome =
                    synth_new_from_diff(path, summary, target, max_files_per_q, backend)?;
                dropped += outcome.dropped_samples;
                skipped += usize::from(outcome.skipped_file);
                pool.extend(outcome.examples);
            }
        }
        "full-file" => {
            for entry in &manifest.changes {
                if !entry.is_new_anchor() {
                    continue;
                }
                let path = entry.display_path();
                let content = file_content_at_head(
                    args.repo.as_deref(),
                    args.contents.as_deref(),
                    &manifest.head,
                    path,
                )?;
                let outcome =
                    synth_new_from_file(path, &content, target, max_files_per_q, backend)?;
                dropped += outcome.dropped_samples;
                skipped += usize::from(outcome.skipped_file);
                pool.extend(outcome.examples);
            }
        }
        other => bail!("unknown mode {other:?} (expected git-diff or full-file)"),
    }
    Ok((pool, dropped, skipped))
}

pub fn run(ctx: &Context, args: DatasetArgs) -> Result<()> {
    let backend_name = ctx
        .file_config
        .string_or(args.backend.clone(), "backend", "offline");
    let target = ctx.file_config.usize_or(args.target, "target", 3);
    let max_files_per_q = ctx
        .file_config
        .usize_or(args.max_files_per_q, "max_files_per_q", 3);
    let seed = ctx
        .file_config
        .u64_or(args.seed.or(ctx.global_seed), "seed", 0);

    let manifest = load_bundle(&args.bundle)?;
    let snapshot = load_snapshot(&args.snapshot)?;

    let client;
    let backend = match backend_name.as_str() {
        "offline" => SynthBackend::Offline,
        "service" => {
            client = ChatClient::from_env()?.with_cache_dir(args.cache.clone());
            SynthBackend::Service(&client)
        }
        other => bail!("unknown backend {other:?} (expected service or offline)"),
    };

    // NEW pool: synthesized from M/A anchors, then made Y-valid.
    let (raw_new, dropped_samples, skipped_files) =
        synth_new_pool(&args, &manifest, &backend, target, max_files_per_q)?;
    let raw_new_len = raw_new.len();
    let (new_pool, mut reject_log) = validate_labels(raw_new, &manifest.alias_map, &snapshot);

    // OLD pool: defensively remapped (any change is logged), then screened
    // by the blocklist.
    let old_text = std::fs::read_to_string(&args.old_pool)
        .with_context(|| format!("reading {}", args.old_pool.display()))?;
    let mut old_examples = read_jsonl(&old_text)?;
    let old_total = old_examples.len();
    for ex in &mut old_examples {
        ex.origin = Origin::Old;
    }
    let (old_valid, old_log) = validate_labels(old_examples, &manifest.alias_map, &snapshot);
    reject_log.extend(old_log);
    let changed = manifest.changed_paths();
    let old_pool = filter_old_pool(old_valid, &changed);

    let recipe = MixRecipe {
        new_count: args.new,
        old_count: args.old,
        seed,
    };
    let mixed = mix(&new_pool, &old_pool, &recipe)?;

    let mut prov = Provenance::new(
        "dataset",
        serde_json::json!({
            "mode": args.mode,
            "backend": backend_name,
            "target": target,
            "max_files_per_q": max_files_per_q,
            "new": args.new,
            "old": args.old,
            "seed": seed,
        }),
    );
    prov.record_input(&args.bundle);
    prov.record_input(&args.old_pool);
    prov.write_artifact(&args.out, &write_jsonl(&mixed))?;

    if let Some(reject_path) = &args.reject_log {
        let mut text = String::new();
        for r in &reject_log {
            text.push_str(&serde_json::to_string(r).expect("rejection serializes"));
            text.push('\n');
        }
        prov.write_artifact(reject_path, &text)?;
    }

    log_rejections(&reject_log);
    println!(
        "pools: NEW {} kept of {} synthesized ({dropped_samples} samples dropped, {skipped_files} files skipped), OLD {} kept of {} after validation and blocklist; {} reject-log entries; mixed {}n/{}o seed {} -> {}",
        new_pool.len(),
        raw_new_len,
        old_pool.len(),
        old_total,
        reject_log.len(),
        args.new,
        args.old,
        seed,
        args.out.display()
    );
    Ok(())
}

fn log_rejections(log: &[Rejection]) {
    for r in log {
        log::info!("{:?} {}: {}", r.reason, r.id, r.path);
    }
}
