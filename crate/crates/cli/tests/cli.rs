//! Command-line behavior: exit codes, offline capture, config merging, and
//! a golden eval report.

use std::path::{Path, PathBuf};
use std::process::Command;

fn drift(args: &[&str], cwd: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_drift"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = drift(&["--help"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("window"));
    assert!(text.contains("eval"));
}

#[test]
fn missing_required_flag_is_usage_error_naming_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = drift(&["eval", "--bundle", "b.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("--snapshot"), "stderr: {stderr}");
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = drift(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn operational_error_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = drift(
        &[
            "eval", "--bundle", "missing.json", "--snapshot", "s.txt", "--gold", "g.jsonl",
            "--pred", "p.jsonl", "--report", "r.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("missing.json"));
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

const FIXTURE_BUNDLE: &str = r#"{
  "base": "1111111111111111111111111111111111111111",
  "head": "2222222222222222222222222222222222222222",
  "changes": [
    {"status": "R085", "old_path": "flask/app.py", "new_path": "src/flask/app.py"},
    {"status": "D", "path": "flask/__init__.py"},
    {"status": "M", "path": "examples/tutorial/flaskr/db.py"}
  ],
  "alias_map": {
    "flask/__init__.py": "__DELETED__",
    "flask/app.py": "src/flask/app.py"
  },
  "adds": [],
  "mods": ["examples/tutorial/flaskr/db.py"],
  "deletes": ["flask/__init__.py"],
  "renames": [{"old": "flask/app.py", "new": "src/flask/app.py", "score": "R085"}]
}
"#;

#[test]
fn window_offline_mode_builds_bundle_without_git() {
    let dir = tempfile::tempdir().unwrap();
    let capture = dir.path().join("capture");
    std::fs::create_dir_all(&capture).unwrap();
    std::fs::write(
        capture.join("name_status.txt"),
        "M\texamples/tutorial/flaskr/db.py\nR085\tflask/app.py\tsrc/flask/app.py\nD\tflask/__init__.py\n",
    )
    .unwrap();

    let out = drift(
        &[
            "window", "--offline", capture.to_str().unwrap(), "--out", "bundle.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let bundle: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("bundle.json")).unwrap())
            .unwrap();
    assert_eq!(bundle["alias_map"]["flask/__init__.py"], "__DELETED__");
    assert_eq!(bundle["alias_map"]["flask/app.py"], "src/flask/app.py");
    assert_eq!(bundle["renames"][0]["score"], "R085");
}

#[test]
fn eval_report_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bundle.json", FIXTURE_BUNDLE);
    write(
        dir.path(),
        "snapshot.txt",
        "src/flask/app.py\nexamples/tutorial/flaskr/db.py\ndocs/changes.rst\n",
    );
    write(
        dir.path(),
        "gold.jsonl",
        concat!(
            "{\"id\":\"q1\",\"question\":\"app factory\",\"gold_paths\":[\"src/flask/app.py\"]}\n",
            "{\"id\":\"q2\",\"question\":\"tutorial db\",\"gold_paths\":[\"examples/tutorial/flaskr/db.py\",\"docs/changes.rst\"]}\n",
            "{\"id\":\"q3\",\"question\":\"init exports\",\"gold_paths\":[\"docs/changes.rst\"]}\n",
        ),
    );
    // q1 answers via the old name (alias credit), q2 recovers one of two
    // files, q3 predicts a deleted path (dropped, scored empty).
    write(
        dir.path(),
        "preds.jsonl",
        concat!(
            "{\"id\":\"q1\",\"raw_output\":\"Sure: [\\\"flask/app.py\\\"]\"}\n",
            "{\"id\":\"q2\",\"paths\":[\"examples/tutorial/flaskr/db.py\"]}\n",
            "{\"id\":\"q3\",\"raw_output\":\"[\\\"flask/__init__.py\\\"]\"}\n",
        ),
    );

    let out = drift(
        &[
            "eval", "--bundle", "bundle.json", "--snapshot", "snapshot.txt", "--gold",
            "gold.jsonl", "--pred", "preds.jsonl", "--report", "report.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let actual = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let golden_path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/eval_report.json");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden_path, &actual).unwrap();
    } else {
        let expected = std::fs::read_to_string(&golden_path).expect("golden exists");
        assert_eq!(actual, expected);
    }

    // Sanity on the arithmetic regardless of the golden file: EM counts q1
    // only, MR is 2 hits over 4 gold paths.
    let value: serde_json::Value = serde_json::from_str(&actual).unwrap();
    assert_eq!(value["n"], 3);
    assert_eq!(value["em"].as_f64().unwrap(), 1.0 / 3.0);
    assert_eq!(value["mr"].as_f64().unwrap(), 0.5);
    assert_eq!(value["reason_counts"]["alias_rename"], 1);
    assert_eq!(value["reason_counts"]["alias_deleted"], 1);
}

#[test]
fn config_file_fills_unset_flags() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bundle.json", FIXTURE_BUNDLE);
    write(dir.path(), "snapshot.txt", "src/flask/app.py\npkg/db.py\n");
    write(
        dir.path(),
        "questions.jsonl",
        "{\"id\":\"q1\",\"question\":\"where is the db helper in pkg\"}\n",
    );
    // An impossible min score from the config: the baseline returns [].
    write(dir.path(), "drift.toml", "lexical_min_score = 9.0\n");

    let out = drift(
        &[
            "--config", "drift.toml", "baseline", "--bundle", "bundle.json", "--snapshot",
            "snapshot.txt", "--questions", "questions.jsonl", "--out", "preds.jsonl",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let preds = std::fs::read_to_string(dir.path().join("preds.jsonl")).unwrap();
    assert!(preds.contains("\"raw_output\":\"[]\""), "{preds}");

    // The explicit flag overrides the config and retrieval works again.
    let out = drift(
        &[
            "--config", "drift.toml", "baseline", "--bundle", "bundle.json", "--snapshot",
            "snapshot.txt", "--questions", "questions.jsonl", "--min-score", "0.1", "--out",
            "preds2.jsonl",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let preds2 = std::fs::read_to_string(dir.path().join("preds2.jsonl")).unwrap();
    assert!(preds2.contains("pkg/db.py"), "{preds2}");
}

#[test]
fn artifacts_carry_provenance_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bundle.json", FIXTURE_BUNDLE);
    write(dir.path(), "snapshot.txt", "src/flask/app.py\n");
    write(
        dir.path(),
        "gold.jsonl",
        "{\"id\":\"q1\",\"question\":\"x\",\"gold_paths\":[\"src/flask/app.py\"]}\n",
    );
    write(dir.path(), "preds.jsonl", "{\"id\":\"q1\",\"paths\":[\"src/flask/app.py\"]}\n");
    let out = drift(
        &[
            "eval", "--bundle", "bundle.json", "--snapshot", "snapshot.txt", "--gold",
            "gold.jsonl", "--pred", "preds.jsonl", "--report", "report.json",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("report.json.meta.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(meta["tool"], "drift");
    assert_eq!(meta["command"], "eval");
    assert!(meta["config_hash"].as_str().unwrap().len() == 64);
    assert!(meta["input_hashes"].as_object().unwrap().len() >= 3);
}

#[test]
fn probe_falls_back_to_rename_targets_without_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bundle.json", FIXTURE_BUNDLE);
    write(
        dir.path(),
        "gold.jsonl",
        "{\"id\":\"p1\",\"question\":\"x\",\"gold_paths\":[\"flask/app.py\"]}\n",
    );
    write(
        dir.path(),
        "preds.jsonl",
        "{\"id\":\"p1\",\"raw_output\":\"[\\\"src/flask/app.py\\\"]\"}\n",
    );
    let out = drift(
        &[
            "probe", "--bundle", "bundle.json", "--gold", "gold.jsonl", "--pred", "preds.jsonl",
            "--report", "probe.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let probe: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("probe.json")).unwrap())
            .unwrap();
    assert_eq!(probe["counts"]["new_name"], 1);
    assert_eq!(probe["emission_rate"], 0.0);
}

#[test]
fn report_csv_format_is_quoted() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bundle.json", FIXTURE_BUNDLE);
    write(dir.path(), "snapshot.txt", "src/flask/app.py\n");
    write(
        dir.path(),
        "gold.jsonl",
        "{\"id\":\"q1\",\"question\":\"x\",\"gold_paths\":[\"src/flask/app.py\"]}\n",
    );
    write(dir.path(), "preds.jsonl", "{\"id\":\"q1\",\"paths\":[\"src/flask/app.py\"]}\n");
    let out = drift(
        &[
            "eval", "--bundle", "bundle.json", "--snapshot", "snapshot.txt", "--gold",
            "gold.jsonl", "--pred", "preds.jsonl", "--report", "report.json",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let out = drift(
        &["report", "--report", "report.json", "--format", "csv"],
        dir.path(),
    );
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("\"variant\",\"n\",\"em\",\"mr\"\r\n"), "{csv}");
    assert!(csv.contains("\"slice:NEW\""));
    assert!(csv.contains("\"reason:direct\""));
}
