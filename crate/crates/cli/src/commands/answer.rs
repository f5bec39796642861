use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context as _, Result};
use serde::{Deserialize, Serialize};

use drift_core::alias::{NormalizedPath, SnapshotIndex};
use drift_core::harness::{
    answer, AdapterConfig, ReplayStore, DEFAULT_LEXICAL_MIN_SCORE, DEFAULT_LEXICAL_TOP_K,
};
use drift_core::icl::IclPrompt;
use drift_core::service::ChatClient;

use crate::artifact::Provenance;
use crate::commands::Context;
use crate::io::{load_questions, load_snapshot};
use crate::{AnswerArgs, BaselineArgs};

#[derive(Serialize)]
struct PredRecord<'a> {
    id: &'a str,
    raw_output: &'a str,
}

fn tree_contents(root: &Path, snapshot: &SnapshotIndex) -> BTreeMap<NormalizedPath, String> {
    let mut map = BTreeMap::new();
    for path in snapshot.iter() {
        if let Ok(text) = std::fs::read_to_string(root.join(path.as_str())) {
            map.insert(path.clone(), text);
        }
    }
    map
}

fn write_predictions(
    prov: &mut Provenance,
    out: &Path,
    rows: &[(String, String)],
) -> Result<()> {
    let mut text = String::new();
    for (id, raw) in rows {
        text.push_str(&serde_json::to_string(&PredRecord {
            id,
            raw_output: raw,
        })?);
        text.push('\n');
    }
    prov.write_artifact(out, &text)?;
    Ok(())
}

pub fn run_baseline(ctx: &Context, args: BaselineArgs) -> Result<()> {
    let top_k = ctx
        .file_config
        .usize_or(args.top_k, "lexical_top_k", DEFAULT_LEXICAL_TOP_K);
    let min_score =
        ctx.file_config
            .f64_or(args.min_score, "lexical_min_score", DEFAULT_LEXICAL_MIN_SCORE);

    let snapshot = load_snapshot(&args.snapshot)?;
    let contents = if args.contents {
        if !args.snapshot.is_dir() {
            bail!("--contents needs the snapshot to be a checked-out tree");
        }
        Some(tree_contents(&args.snapshot, &snapshot))
    } else {
        None
    };
    let cfg = AdapterConfig::Lexical {
        snapshot,
        contents,
        top_k,
        min_score,
    };

    let questions = load_questions(&args.questions)?;
    let mut rows = Vec::new();
    for (id, question) in &questions {
        rows.push((id.clone(), answer(id, question, None, &cfg)?));
    }

    let mut prov = Provenance::new(
        "baseline",
        serde_json::json!({
            "top_k": top_k,
            "min_score": min_score,
            "contents": args.contents,
        }),
    );
    prov.record_input(&args.bundle);
    prov.record_input(&args.questions);
    write_predictions(&mut prov, &args.out, &rows)?;

    println!(
        "baseline answered {} question(s) -> {}",
        rows.len(),
        args.out.display()
    );
    Ok(())
}

#[derive(Deserialize)]
struct PromptRecordIn {
    id: String,
    system: String,
    user: String,
}

fn load_prompts(path: &Path) -> Result<BTreeMap<String, IclPrompt>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: PromptRecordIn = serde_json::from_str(line)
            .with_context(|| format!("{}:{}", path.display(), idx + 1))?;
        map.insert(
            record.id,
            IclPrompt {
                system_text: record.system,
                user_text: record.user,
                delta_entries: Vec::new(),
                budget_chars: 0,
                overflow_dropped: 0,
            },
        );
    }
    Ok(map)
}

pub fn run_answer(ctx: &Context, args: AnswerArgs) -> Result<()> {
    let questions = load_questions(&args.questions)?;
    let mut rows = Vec::new();

    match args.adapter.as_str() {
        "replay" => {
            let file = args
                .replay
                .as_ref()
                .ok_or_else(|| anyhow!("--adapter replay needs --replay <jsonl>"))?;
            let store = ReplayStore::from_file(file)?;
            let cfg = AdapterConfig::Replay(store);
            for (id, question) in &questions {
                rows.push((id.clone(), answer(id, question, None, &cfg)?));
            }
        }
        "lexical" => {
            let snapshot_path = args
                .snapshot
                .as_ref()
                .ok_or_else(|| anyhow!("--adapter lexical needs --snapshot"))?;
            let snapshot = load_snapshot(snapshot_path)?;
            let contents = if args.contents {
                if !snapshot_path.is_dir() {
                    bail!("--contents needs the snapshot to be a checked-out tree");
                }
                Some(tree_contents(snapshot_path, &snapshot))
            } else {
                None
            };
            let cfg = AdapterConfig::Lexical {
                snapshot,
                contents,
                top_k: ctx
                    .file_config
                    .usize_or(args.top_k, "lexical_top_k", DEFAULT_LEXICAL_TOP_K),
                min_score: ctx.file_config.f64_or(
                    args.min_score,
                    "lexical_min_score",
                    DEFAULT_LEXICAL_MIN_SCORE,
                ),
            };
            for (id, question) in &questions {
                rows.push((id.clone(), answer(id, question, None, &cfg)?));
            }
        }
        "service" => {
            let client = ChatClient::from_env()?.with_cache_dir(args.cache.clone());
            let prompts = match &args.prompts {
                Some(path) => load_prompts(path)?,
                None => BTreeMap::new(),
            };
            let cfg = AdapterConfig::Service(client);
            for (id, question) in &questions {
                rows.push((id.clone(), answer(id, question, prompts.get(id), &cfg)?));
            }
        }
        other => bail!("unknown adapter {other:?} (expected replay, service, or lexical)"),
    }

    let mut prov = Provenance::new(
        "answer",
        serde_json::json!({ "adapter": args.adapter }),
    );
    prov.record_input(&args.questions);
    if let Some(f) = &args.replay {
        prov.record_input(f);
    }
    if let Some(f) = &args.prompts {
        prov.record_input(f);
    }
    write_predictions(&mut prov, &args.out, &rows)?;

    println!(
        "{} adapter answered {} question(s) -> {}",
        args.adapter,
        rows.len(),
        args.out.display()
    );
    Ok(())
}
