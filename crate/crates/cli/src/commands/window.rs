use anyhow::{Context as _, Result};

use drift_core::window::{
    build_manifest, capture_window, load_capture, parse_name_status, save_capture, WindowRef,
};

use crate::artifact::Provenance;
use crate::commands::Context;
use crate::WindowArgs;

pub fn run(ctx: &Context, args: WindowArgs) -> Result<()> {
    let workers = ctx.file_config.usize_or(args.workers, "workers", 4);

    let capture = match &args.offline {
        Some(dir) => load_capture(dir)
            .with_context(|| format!("loading offline capture from {}", dir.display()))?,
        None => {
            let repo = args.repo.as_ref().expect("clap enforces --repo");
            let base = args.base.as_ref().expect("clap enforces --base");
            let head = args.head.as_ref().expect("clap enforces --head");
            let window = WindowRef::new(repo, base, head).with_globs(args.globs.clone());
            capture_window(&window, args.include_deletes, workers)?
        }
    };

    let entries = parse_name_status(&capture.name_status)?;
    let manifest = build_manifest(entries, &capture.base_sha, &capture.head_sha)?;

    if let Some(dir) = &args.patches_out {
        save_capture(&capture, dir)
            .with_context(|| format!("saving capture to {}", dir.display()))?;
    }

    let mut prov = Provenance::new(
        "window",
        serde_json::json!({
            "repo": args.repo.as_ref().map(|p| p.display().to_string()),
            "base": args.base,
            "head": args.head,
            "globs": args.globs,
            "include_deletes": args.include_deletes,
            "offline": args.offline.as_ref().map(|p| p.display().to_string()),
            "workers": workers,
        }),
    );
    if let Some(dir) = &args.offline {
        prov.record_input(&dir.join("name_status.txt"));
    }
    prov.write_artifact(&args.out, &manifest.to_json())?;

    println!(
        "window {}..{}: {} changes ({} adds, {} mods, {} deletes, {} renames) -> {}",
        manifest.base,
        manifest.head,
        manifest.changes.len(),
        manifest.adds.len(),
        manifest.mods.len(),
        manifest.deletes.len(),
        manifest.renames.len(),
        args.out.display()
    );
    Ok(())
}
