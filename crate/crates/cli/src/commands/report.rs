use anyhow::{bail, Context as _, Result};

use crate::artifact::Provenance;
use crate::commands::Context;
use crate::render::{parse_report, render_eval, render_probe, ReportDoc, ReportFormat};
use crate::ReportArgs;

fn label_for(path: &std::path::Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".to_string())
}

pub fn run(ctx: &Context, args: ReportArgs) -> Result<()> {
    let format: ReportFormat = ctx
        .file_config
        .string_or(args.format.clone(), "format", "md")
        .parse()?;

    let text = std::fs::read_to_string(&args.report)
        .with_context(|| format!("reading {}", args.report.display()))?;
    let doc = parse_report(&text)?;

    let rendered = match doc {
        ReportDoc::Probe(probe) => {
            if args.base_report.is_some() {
                bail!("--base-report applies to eval reports, not probe reports");
            }
            render_probe(&probe, format)
        }
        ReportDoc::Eval(report) => {
            let base = match &args.base_report {
                Some(path) => {
                    let base_text = std::fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    match parse_report(&base_text)? {
                        ReportDoc::Eval(b) => Some(b),
                        ReportDoc::Probe(_) => bail!("base report is a probe report"),
                    }
                }
                None => None,
            };
            render_eval(
                &report,
                base.as_ref(),
                &label_for(&args.report),
                args.base_report
                    .as_deref()
                    .map(label_for)
                    .unwrap_or_else(|| "base".to_string())
                    .as_str(),
                format,
            )
        }
    };

    match &args.out {
        Some(path) => {
            let mut prov = Provenance::new(
                "report",
                serde_json::json!({
                    "format": ctx.file_config.string_or(args.format.clone(), "format", "md"),
                }),
            );
            prov.record_input(&args.report);
            if let Some(b) = &args.base_report {
                prov.record_input(b);
            }
            prov.write_artifact(path, &rendered)?;
            println!("report -> {}", path.display());
        }
        None => print!("{rendered}"),
    }
    Ok(())
}
