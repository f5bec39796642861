use anyhow::{Context as _, Result};

use drift_core::alias::{AliasMap, SnapshotIndex};
use drift_core::eval::{probe_score, score_corpus, score_prediction, ProbeInstance};
use drift_core::harness::ReplayStore;

use crate::artifact::Provenance;
use crate::commands::Context;
use crate::io::{load_bundle, load_gold, load_snapshot};
use crate::render::{render_eval, render_probe, ReportFormat};
use crate::{EvalArgs, ProbeArgs};

pub fn run_eval(_ctx: &Context, args: EvalArgs) -> Result<()> {
    let manifest = load_bundle(&args.bundle)?;
    let snapshot = load_snapshot(&args.snapshot)?;
    let gold_items = load_gold(&args.gold)?;
    let predictions = ReplayStore::from_file(&args.pred)
        .with_context(|| format!("reading predictions {}", args.pred.display()))?;

    // --no-remap shares the scorer: an empty alias map and whatever snapshot
    // the caller provided (base-side for old-dialect scoring).
    let alias = if args.no_remap {
        AliasMap::new()
    } else {
        manifest.alias_map.clone()
    };
    let changed_ma = manifest.modified_added();

    let mut records = Vec::new();
    for item in &gold_items {
        let raw = predictions.lookup(&item.id);
        records.push(score_prediction(
            &item.id,
            &raw,
            &item.gold_paths,
            &alias,
            &snapshot,
            &changed_ma,
        )?);
    }
    let report = score_corpus(&records)?;

    let mut prov = Provenance::new(
        "eval",
        serde_json::json!({
            "no_remap": args.no_remap,
            "snapshot": args.snapshot.display().to_string(),
        }),
    );
    prov.record_input(&args.bundle);
    prov.record_input(&args.gold);
    prov.record_input(&args.pred);
    prov.write_artifact(&args.report, &render_eval(&report, None, "variant", "base", ReportFormat::Json))?;

    println!(
        "eval: n={} EM={:.4} MR={:.4} -> {}",
        report.n,
        report.em,
        report.mr,
        args.report.display()
    );
    Ok(())
}

pub fn run_probe(_ctx: &Context, args: ProbeArgs) -> Result<()> {
    let manifest = load_bundle(&args.bundle)?;
    // Without an explicit snapshot, the rename targets stand in for the
    // head-side paths the probe needs to recognize new names.
    let snapshot = match &args.snapshot {
        Some(path) => load_snapshot(path)?,
        None => SnapshotIndex::from_paths(manifest.renames.iter().map(|r| r.new.clone())),
    };
    let gold_items = load_gold(&args.gold)?;
    let predictions = ReplayStore::from_file(&args.pred)
        .with_context(|| format!("reading predictions {}", args.pred.display()))?;

    let instances: Vec<ProbeInstance> = gold_items
        .iter()
        .map(|item| ProbeInstance {
            id: item.id.clone(),
            gold_old_side: item.gold_paths.clone(),
            raw_output: predictions.lookup(&item.id),
        })
        .collect();
    let report = probe_score(&instances, &manifest.alias_map, &snapshot)?;

    let mut prov = Provenance::new(
        "probe",
        serde_json::json!({
            "snapshot": args.snapshot.as_ref().map(|p| p.display().to_string()),
        }),
    );
    prov.record_input(&args.bundle);
    prov.record_input(&args.gold);
    prov.record_input(&args.pred);
    prov.write_artifact(&args.report, &render_probe(&report, ReportFormat::Json))?;

    println!(
        "probe: emissions {:.2} ({} old_name, {} new_name, {} deleted_old, {} unknown) old_em={:.4} old_mr={:.4} -> {}",
        report.emission_rate,
        report.counts.old_name,
        report.counts.new_name,
        report.counts.deleted_old,
        report.counts.unknown,
        report.old_em,
        report.old_mr,
        args.report.display()
    );
    Ok(())
}
