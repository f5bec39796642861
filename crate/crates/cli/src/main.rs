//! `drift` — commit-window pipeline: manifest capture, delta summaries,
//! training-set forging, ICL prompt assembly, baseline predictions, and
//! alias-aware scoring.

mod artifact;
mod commands;
mod config;
mod io;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "drift",
    version,
    about = "Repository commit-window toolkit: manifests, delta datasets, prompts, and alias-aware scoring"
)]
struct Cli {
    /// Key=value (TOML) config file; explicit flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Global sampling seed, used when a subcommand seed is not given.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Log level: error, warn, info, debug, trace.
    #[arg(long, global = true)]
    log_level: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Capture a commit window into a bundle JSON.
    Window(WindowArgs),
    /// Attach English delta summaries to a bundle's change entries.
    Summarize(SummarizeArgs),
    /// Forge a NEW:OLD mixed training set from a summarized bundle.
    Dataset(DatasetArgs),
    /// Compose delta-patched retrieval prompts.
    Icl(IclArgs),
    /// Score predictions with the alias-aware evaluator.
    Eval(EvalArgs),
    /// Run the no-remap forgetting probe.
    Probe(ProbeArgs),
    /// Produce lexical-baseline predictions for a question set.
    Baseline(BaselineArgs),
    /// Produce predictions through a chosen adapter.
    Answer(AnswerArgs),
    /// Render a report as JSON, CSV, or a markdown table (optionally Δ vs a
    /// base report).
    Report(ReportArgs),
}

#[derive(clap::Args)]
pub struct WindowArgs {
    /// Repository working tree (live capture).
    #[arg(long, required_unless_present = "offline")]
    repo: Option<PathBuf>,
    /// Base revision X.
    #[arg(long, required_unless_present = "offline")]
    base: Option<String>,
    /// Head revision Y.
    #[arg(long, required_unless_present = "offline")]
    head: Option<String>,
    /// Code-file glob; repeatable. Defaults to the standard code-extension
    /// list.
    #[arg(long = "glob")]
    globs: Vec<String>,
    /// Include deleted files via a second D-filtered pass.
    #[arg(long)]
    include_deletes: bool,
    /// Pre-captured window directory (offline mode; skips git entirely).
    #[arg(long)]
    offline: Option<PathBuf>,
    /// Also save the raw capture (name-status + patches) to this directory.
    #[arg(long)]
    patches_out: Option<PathBuf>,
    /// Parallel workers for per-file diff extraction.
    #[arg(long)]
    workers: Option<usize>,
    /// Output bundle JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
pub struct SummarizeArgs {
    /// Bundle to summarize (updated in place unless --out is given).
    #[arg(long)]
    bundle: PathBuf,
    /// service | heuristic
    #[arg(long)]
    backend: Option<String>,
    /// Character cap applied to each raw diff before summarization.
    #[arg(long)]
    max_diff_chars: Option<usize>,
    /// Request/response cache directory for the service backend.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Live repository to extract diffs from.
    #[arg(long, required_unless_present = "patches")]
    repo: Option<PathBuf>,
    /// Pre-captured window directory holding the per-file patches.
    #[arg(long)]
    patches: Option<PathBuf>,
    /// Parallel summarization workers.
    #[arg(long)]
    workers: Option<usize>,
    /// Write the summarized bundle here instead of in place.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct DatasetArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// git-diff | full-file
    #[arg(long)]
    mode: String,
    /// Target-snapshot paths: a listing file or a checked-out tree.
    #[arg(long)]
    snapshot: PathBuf,
    /// Legacy examples JSONL (the OLD pool before screening).
    #[arg(long)]
    old_pool: PathBuf,
    /// Exact NEW count in the mix.
    #[arg(long)]
    new: usize,
    /// Exact OLD count in the mix.
    #[arg(long)]
    old: usize,
    /// Sampling seed (falls back to the global --seed).
    #[arg(long)]
    seed: Option<u64>,
    /// service | offline
    #[arg(long)]
    backend: Option<String>,
    /// Questions to propose per anchor file.
    #[arg(long)]
    target: Option<usize>,
    /// Maximum gold paths per synthesized question.
    #[arg(long)]
    max_files_per_q: Option<usize>,
    /// Live repository for full-file content (git show at the bundle head).
    #[arg(long)]
    repo: Option<PathBuf>,
    /// Checked-out tree for full-file content.
    #[arg(long)]
    contents: Option<PathBuf>,
    /// Request/response cache directory for the service backend.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Training JSONL output.
    #[arg(long)]
    out: PathBuf,
    /// Rejection/remap log JSONL output.
    #[arg(long)]
    reject_log: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct IclArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// Single ad-hoc question.
    #[arg(long, conflicts_with = "questions")]
    question: Option<String>,
    /// Question set JSONL ({"id","question"}).
    #[arg(long, required_unless_present = "question")]
    questions: Option<PathBuf>,
    /// Deltas considered after ranking.
    #[arg(long)]
    k: Option<usize>,
    /// Character budget for the whole prompt.
    #[arg(long)]
    budget: Option<usize>,
    /// Put truncated raw diffs in the delta block instead of summaries.
    #[arg(long)]
    raw_diffs: bool,
    /// Emit chat-protocol markup around the turns.
    #[arg(long)]
    chat_markup: bool,
    /// Pre-captured window directory (raw-diff source).
    #[arg(long)]
    patches: Option<PathBuf>,
    /// Live repository (raw-diff source).
    #[arg(long)]
    repo: Option<PathBuf>,
    /// Character cap per raw diff.
    #[arg(long)]
    max_diff_chars: Option<usize>,
    /// Prompts JSONL output.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
pub struct EvalArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// Target-snapshot paths (listing file or tree). Under --no-remap, pass
    /// the base-side listing instead.
    #[arg(long)]
    snapshot: PathBuf,
    /// Gold JSONL ({"id","question","gold_paths"}).
    #[arg(long)]
    gold: PathBuf,
    /// Predictions JSONL ({"id","raw_output"} or {"id","paths"}).
    #[arg(long)]
    pred: PathBuf,
    /// Disable alias remapping (empty alias map; scores raw paths against
    /// the given snapshot).
    #[arg(long)]
    no_remap: bool,
    /// Report JSON output.
    #[arg(long)]
    report: PathBuf,
}

#[derive(clap::Args)]
pub struct ProbeArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// Target-snapshot paths; defaults to the bundle's rename targets.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    /// Gold JSONL with base-side paths, all renamed or deleted in the
    /// window.
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    report: PathBuf,
}

#[derive(clap::Args)]
pub struct BaselineArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// Snapshot listing file or checked-out tree.
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long)]
    questions: PathBuf,
    /// Score file contents too (snapshot must be a tree).
    #[arg(long)]
    contents: bool,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    min_score: Option<f64>,
    /// Predictions JSONL output.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
pub struct AnswerArgs {
    /// replay | service | lexical
    #[arg(long)]
    adapter: String,
    #[arg(long)]
    questions: PathBuf,
    /// Canned predictions JSONL (replay adapter).
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Composed prompts JSONL from `icl` (service adapter).
    #[arg(long)]
    prompts: Option<PathBuf>,
    /// Snapshot listing or tree (lexical adapter).
    #[arg(long)]
    snapshot: Option<PathBuf>,
    /// Score file contents too (lexical adapter over a tree snapshot).
    #[arg(long)]
    contents: bool,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    min_score: Option<f64>,
    /// Request/response cache directory (service adapter).
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
pub struct ReportArgs {
    /// Report JSON produced by `eval` or `probe`.
    #[arg(long)]
    report: PathBuf,
    /// Base report for Δ columns.
    #[arg(long)]
    base_report: Option<PathBuf>,
    /// json | csv | md
    #[arg(long)]
    format: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file_config = match config::FileConfig::load(cli.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err:#}");
            return ExitCode::from(1);
        }
    };

    let level = file_config.string_or(cli.log_level.clone(), "log_level", "warn");
    env_logger::Builder::new()
        .parse_filters(&level)
        .format_timestamp(None)
        .init();

    let ctx = commands::Context {
        file_config,
        global_seed: cli.seed,
    };
    let result = match cli.command {
        Command::Window(args) => commands::window::run(&ctx, args),
        Command::Summarize(args) => commands::summarize::run(&ctx, args),
        Command::Dataset(args) => commands::dataset::run(&ctx, args),
        Command::Icl(args) => commands::icl::run(&ctx, args),
        Command::Eval(args) => commands::eval::run_eval(&ctx, args),
        Command::Probe(args) => commands::eval::run_probe(&ctx, args),
        Command::Baseline(args) => commands::answer::run_baseline(&ctx, args),
        Command::Answer(args) => commands::answer::run_answer(&ctx, args),
        Command::Report(args) => commands::report::run(&ctx, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
