//! Report rendering: JSON, RFC-4180 CSV, and markdown tables mirroring the
//! EM/MR/Δ-vs-base layout, plus reason and probe breakdowns.

use anyhow::{bail, Result};

use drift_core::eval::{EvalReport, ProbeReport, ALL_REASONS, ALL_SLICES};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Md,
}

impl std::str::FromStr for ReportFormat {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "md" => Ok(Self::Md),
            other => bail!("unknown report format {other:?} (expected json, csv, or md)"),
        }
    }
}

/// Either report kind, as loaded from disk.
pub enum ReportDoc {
    Eval(EvalReport),
    Probe(ProbeReport),
}

/// Probe reports carry `counts`; eval reports carry `per_slice`.
pub fn parse_report(text: &str) -> Result<ReportDoc> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("counts").is_some() {
        Ok(ReportDoc::Probe(serde_json::from_value(value)?))
    } else {
        Ok(ReportDoc::Eval(serde_json::from_value(value)?))
    }
}

fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

fn fmt_delta(v: f64) -> String {
    // Normalize negative zero so "variant == base" renders +0.0000.
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:+.4}")
}

/// RFC-4180 quoting: wrap in quotes, double any embedded quote.
fn csv_field(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn csv_row(fields: &[String]) -> String {
    fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn render_eval(
    report: &EvalReport,
    base: Option<&EvalReport>,
    variant_label: &str,
    base_label: &str,
    format: ReportFormat,
) -> String {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_string_pretty(report).expect("report serializes");
            out.push('\n');
            out
        }
        ReportFormat::Csv => {
            let mut lines = Vec::new();
            match base {
                Some(b) => {
                    lines.push(csv_row(&[
                        "variant".into(),
                        "n".into(),
                        "em".into(),
                        "mr".into(),
                        "delta_em".into(),
                        "delta_mr".into(),
                    ]));
                    lines.push(csv_row(&[
                        base_label.into(),
                        b.n.to_string(),
                        fmt4(b.em),
                        fmt4(b.mr),
                        String::new(),
                        String::new(),
                    ]));
                    lines.push(csv_row(&[
                        variant_label.into(),
                        report.n.to_string(),
                        fmt4(report.em),
                        fmt4(report.mr),
                        fmt_delta(report.em - b.em),
                        fmt_delta(report.mr - b.mr),
                    ]));
                }
                None => {
                    lines.push(csv_row(&[
                        "variant".into(),
                        "n".into(),
                        "em".into(),
                        "mr".into(),
                    ]));
                    lines.push(csv_row(&[
                        variant_label.into(),
                        report.n.to_string(),
                        fmt4(report.em),
                        fmt4(report.mr),
                    ]));
                }
            }
            for slice in ALL_SLICES {
                if let Some(stats) = report.per_slice.get(&slice) {
                    lines.push(csv_row(&[
                        format!("slice:{}", slice_name(slice)),
                        stats.n.to_string(),
                        fmt4(stats.em),
                        fmt4(stats.mr),
                    ]));
                }
            }
            for reason in ALL_REASONS {
                let count = report.reason_counts.get(&reason).copied().unwrap_or(0);
                lines.push(csv_row(&[
                    format!("reason:{}", reason_name(reason)),
                    count.to_string(),
                ]));
            }
            lines.join("\r\n") + "\r\n"
        }
        ReportFormat::Md => {
            let mut out = String::new();
            match base {
                Some(b) => {
                    out.push_str("| Variant | EM | MR | ΔEM | ΔMR |\n");
                    out.push_str("|---|---|---|---|---|\n");
                    out.push_str(&format!(
                        "| {} | {} | {} | — | — |\n",
                        base_label,
                        fmt4(b.em),
                        fmt4(b.mr)
                    ));
                    out.push_str(&format!(
                        "| {} | {} | {} | {} | {} |\n",
                        variant_label,
                        fmt4(report.em),
                        fmt4(report.mr),
                        fmt_delta(report.em - b.em),
                        fmt_delta(report.mr - b.mr)
                    ));
                }
                None => {
                    out.push_str("| Variant | EM | MR |\n|---|---|---|\n");
                    out.push_str(&format!(
                        "| {} | {} | {} |\n",
                        variant_label,
                        fmt4(report.em),
                        fmt4(report.mr)
                    ));
                }
            }
            out.push_str("\n| Slice | n | EM | MR |\n|---|---|---|---|\n");
            for slice in ALL_SLICES {
                if let Some(stats) = report.per_slice.get(&slice) {
                    out.push_str(&format!(
                        "| {} | {} | {} | {} |\n",
                        slice_name(slice),
                        stats.n,
                        fmt4(stats.em),
                        fmt4(stats.mr)
                    ));
                }
            }
            out.push_str("\n| Reason | Count |\n|---|---|\n");
            for reason in ALL_REASONS {
                let count = report.reason_counts.get(&reason).copied().unwrap_or(0);
                out.push_str(&format!("| {} | {} |\n", reason_name(reason), count));
            }
            out
        }
    }
}

pub fn render_probe(report: &ProbeReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_string_pretty(report).expect("report serializes");
            out.push('\n');
            out
        }
        ReportFormat::Csv => {
            let mut lines = Vec::new();
            lines.push(csv_row(&[
                "old_name".into(),
                "new_name".into(),
                "deleted_old".into(),
                "unknown".into(),
                "emission_rate".into(),
                "old_em".into(),
                "old_mr".into(),
            ]));
            lines.push(csv_row(&[
                report.counts.old_name.to_string(),
                report.counts.new_name.to_string(),
                report.counts.deleted_old.to_string(),
                report.counts.unknown.to_string(),
                format!("{:.2}", report.emission_rate),
                fmt4(report.old_em),
                fmt4(report.old_mr),
            ]));
            lines.join("\r\n") + "\r\n"
        }
        ReportFormat::Md => {
            let mut out = String::new();
            out.push_str("| old_name | new_name | deleted_old | unknown | emission_rate |\n");
            out.push_str("|---|---|---|---|---|\n");
            out.push_str(&format!(
                "| {} | {} | {} | {} | {:.2} |\n",
                report.counts.old_name,
                report.counts.new_name,
                report.counts.deleted_old,
                report.counts.unknown,
                report.emission_rate
            ));
            out.push_str("\n| Metric | Value |\n|---|---|\n");
            out.push_str(&format!("| old_em | {} |\n", fmt4(report.old_em)));
            out.push_str(&format!("| old_mr | {} |\n", fmt4(report.old_mr)));
            out
        }
    }
}

fn slice_name(slice: drift_core::eval::Slice) -> &'static str {
    match slice {
        drift_core::eval::Slice::New => "NEW",
        drift_core::eval::Slice::Old => "OLD",
        drift_core::eval::Slice::Mixed => "MIXED",
    }
}

fn reason_name(reason: drift_core::eval::PathReason) -> &'static str {
    use drift_core::eval::PathReason::*;
    match reason {
        Direct => "direct",
        AliasRename => "alias_rename",
        AliasDeleted => "alias_deleted",
        RescuedSuffix => "rescued_suffix",
        RescuedFuzzy => "rescued_fuzzy",
        Invalid => "invalid",
        Unknown => "unknown",
    }
}
