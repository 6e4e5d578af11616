//! Behavior of the installed binary: exit codes, stage gating, and
//! flag handling, exercised through real subprocesses.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_drivecycle"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn help_lists_the_subcommands() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for cmd in ["clean", "segment", "features", "pca", "cluster", "build", "evaluate", "run"] {
        assert!(text.contains(cmd), "help does not mention {cmd}");
    }
}

#[test]
fn print_config_emits_the_effective_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["run", "--print-config", "--seed", "7"]);
    assert_eq!(code(&out), 0);
    let cfg: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cfg["seed"], 7);
    assert!(cfg["thresholds"].is_object());

    let out = run_in(tmp.path(), &["synth-gen", "--print-config"]);
    assert_eq!(code(&out), 0);
    let gen: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(gen["regimes"].is_array());
}

#[test]
fn missing_inputs_are_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["run"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("no input traces"), "stderr was: {err}");
}

#[test]
fn nonexistent_input_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["run", "no_such_trace.csv"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_trace_is_a_pipeline_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.csv"), "t,v_kmh\nfoo,bar\n").unwrap();
    let out = run_in(tmp.path(), &["run", "bad.csv"]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("error:"), "stderr was: {err}");
}

#[test]
fn unknown_method_is_rejected_by_the_parser() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["run", "--method", "spectral", "x.csv"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn broken_config_file_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("cfg.json"), "{\"no_such_field\": 1}").unwrap();
    let out = run_in(tmp.path(), &["run", "--config", "cfg.json", "x.csv"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn stages_gate_which_artifacts_appear() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["synth-gen", "--out", "fixture"]);
    assert_eq!(code(&out), 0);

    let out = run_in(tmp.path(), &["run", "--stage", "features", "--out", "f", "fixture"]);
    assert_eq!(code(&out), 0);
    let f = tmp.path().join("f");
    assert!(f.join("features.csv").is_file());
    assert!(f.join("segments.json").is_file());
    assert!(f.join("summary.json").is_file());
    assert!(!f.join("pca.json").exists());
    assert!(!f.join("cycle.csv").exists());

    let out = run_in(tmp.path(), &["clean", "--out", "c", "fixture"]);
    assert_eq!(code(&out), 0);
    let c = tmp.path().join("c");
    assert!(c.join("clean_report.json").is_file());
    assert!(c.join("cleaned").is_dir());
    assert!(!c.join("segments.json").exists());
}

#[test]
fn method_flag_switches_the_clustering_baseline() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["synth-gen", "--out", "fixture"]);
    assert_eq!(code(&out), 0);
    let out = run_in(
        tmp.path(),
        &["run", "--method", "kmeans", "--stage", "cluster", "--out", "k", "fixture"],
    );
    assert_eq!(code(&out), 0);
    let clusters: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("k/clusters.json")).unwrap())
            .unwrap();
    assert_eq!(clusters["method"], "kmeans");
}

#[test]
fn single_file_and_directory_inputs_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["synth-gen", "--out", "fixture"]);
    assert_eq!(code(&out), 0);
    let out = run_in(
        tmp.path(),
        &["run", "--stage", "segment", "--out", "one", "fixture/urban.csv"],
    );
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("traces: 1"), "stdout was: {text}");
}
