//! End-to-end smoke tests that drive the compiled `adgraph` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_adgraph")
}

/// Overrides shared by every stage of a pipeline run; the run directory
/// is named after the config hash, so all stages must agree on them.
const OVERRIDES: &[&str] = &[
    "synth.ads=600",
    "synth.clusters=12",
    "train.epochs=3",
    "train.dim=8",
    "train.hidden=8",
    "train.batch=16",
    "ig.steps=8",
    "ngram.top=10",
];

fn run(out_dir: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.arg("--out").arg(out_dir);
    for kv in OVERRIDES {
        cmd.arg("--set").arg(kv);
    }
    cmd.args(args);
    cmd.output().expect("binary runs")
}

fn assert_ok(out: &Output, stage: &str) {
    assert!(
        out.status.success(),
        "{stage} failed\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// The single run directory created under `out`.
fn run_dir(out: &Path) -> PathBuf {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(out)
        .expect("out dir exists")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.is_dir())
        .collect();
    assert_eq!(dirs.len(), 1, "expected exactly one run dir, got {dirs:?}");
    dirs.pop().unwrap()
}

#[test]
fn help_exits_zero_and_bad_flag_exits_one() {
    let help = Command::new(bin()).arg("--help").output().expect("runs");
    assert!(help.status.success());
    assert!(String::from_utf8_lossy(&help.stdout).contains("adgraph"));

    let bad = Command::new(bin())
        .arg("--definitely-not-a-flag")
        .output()
        .expect("runs");
    assert_eq!(bad.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&bad.stderr).is_empty());
}

#[test]
fn missing_inputs_exit_two() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let out = run(tmp.path(), &["evaluate", "--task", "htrp"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run train first"));

    let bad_key = Command::new(bin())
        .arg("--out")
        .arg(tmp.path())
        .args(["--set", "no.such.key=1", "split"])
        .output()
        .expect("runs");
    assert_eq!(bad_key.status.code(), Some(2));
}

#[test]
fn full_pipeline_produces_every_artifact() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let out = tmp.path().join("runs");
    let synth = tmp.path().join("synth");

    assert_ok(&run(&out, &["synth", "--dir", synth.to_str().unwrap()]), "synth");
    for name in ["ads.jsonl", "spans.jsonl", "geo_fixture.jsonl", "ground_truth.json"] {
        assert!(synth.join(name).exists(), "synth artifact {name} missing");
    }

    let ads = synth.join("ads.jsonl");
    let spans = synth.join("spans.jsonl");
    let fixture = synth.join("geo_fixture.jsonl");
    assert_ok(&run(&out, &["ingest", "--ads", ads.to_str().unwrap()]), "ingest");
    assert_ok(&run(&out, &["extract", "--spans", spans.to_str().unwrap()]), "extract");
    assert_ok(&run(&out, &["build-graph"]), "build-graph");
    assert_ok(
        &run(&out, &["label", "--fixture", fixture.to_str().unwrap()]),
        "label",
    );
    assert_ok(&run(&out, &["split"]), "split");
    assert_ok(&run(&out, &["emit-oad"]), "emit-oad");
    assert_ok(&run(&out, &["emit-htrp"]), "emit-htrp");
    assert_ok(&run(&out, &["bias-report"]), "bias-report");
    assert_ok(&run(&out, &["train", "--task", "htrp"]), "train htrp");
    assert_ok(&run(&out, &["evaluate", "--task", "htrp"]), "evaluate htrp");
    assert_ok(
        &run(&out, &["attribute", "--task", "htrp", "--limit", "5"]),
        "attribute htrp",
    );
    assert_ok(&run(&out, &["rank-ngrams", "--task", "htrp"]), "rank-ngrams htrp");
    assert_ok(&run(&out, &["train", "--task", "oad"]), "train oad");
    assert_ok(&run(&out, &["evaluate", "--task", "oad"]), "evaluate oad");

    let dir = run_dir(&out);
    for name in [
        "config.resolved",
        "corpus.jsonl",
        "graph.adgb",
        "components.csv",
        "labels.csv",
        "split.csv",
        "oad_train.jsonl",
        "oad_test.jsonl",
        "htrp_train.jsonl",
        "htrp_test.jsonl",
        "bias_htrp.json",
        "bias_oad.json",
        "model_htrp.admc",
        "model_oad.admc",
        "train_history_htrp.json",
        "eval_htrp.json",
        "eval_oad.json",
        "attributions_htrp.jsonl",
        "report_htrp.txt",
        "report_htrp.html",
        "ngrams_htrp.csv",
        "ingest_stats.json",
        "extract_stats.json",
        "graph_stats.json",
        "label_stats.json",
        "split_stats.json",
        "oad_stats.json",
        "htrp_stats.json",
    ] {
        assert!(dir.join(name).exists(), "pipeline artifact {name} missing");
    }

    let eval: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("eval_htrp.json")).unwrap())
            .expect("eval json parses");
    assert!(eval["examples"].as_u64().unwrap() > 0);
    let acc = eval["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc), "accuracy {acc} out of range");

    // A rerun of a stage must reproduce its outputs byte for byte.
    let split_before = std::fs::read(dir.join("split.csv")).unwrap();
    assert_ok(&run(&out, &["split"]), "split rerun");
    let split_after = std::fs::read(dir.join("split.csv")).unwrap();
    assert_eq!(split_before, split_after, "split rerun changed bytes");
}
