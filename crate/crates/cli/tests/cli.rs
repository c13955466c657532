use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ggez_core::merge::{load_checkpoint, save_checkpoint, Checkpoint, TensorRecord};
use serde_json::Value;

fn ggez() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ggez"));
    cmd.env_remove("GGEZ_JOBS");
    cmd
}

fn run(args: &[&str]) -> Output {
    ggez().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).to_string_lossy().into_owned()
}

fn checkpoint(dir: &Path, name: &str, values: &[f32]) -> String {
    let mut c = Checkpoint::new();
    c.insert(TensorRecord::from_f32("w", vec![values.len()], values).unwrap()).unwrap();
    let path = dir.join(name);
    save_checkpoint(&c, &path).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn alpha_from_bundled_index() {
    let out = run(&["alpha", "--region", "SEA", "--year", "2023"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["result"]["alpha"], 0.434);
    assert_eq!(v["result"]["alpha_exact"], "217/500");
    assert_eq!(v["result"]["alpha_rounded"], 0.43);
    let v = json(&run(&["alpha", "--region", "World"]));
    assert_eq!(v["result"]["alpha"], 0.5579);
}

#[test]
fn grp_from_two_scores() {
    let v = json(&run(&["grp", "--q-global", "63.5", "--q-regional", "56.3"]));
    assert_eq!(v["result"]["grp_rounded"], 59.4);
    let v = json(&run(&["--kof-region", "SEA", "grp", "--q-global", "63.5", "--q-regional", "56.3"]));
    assert_eq!(v["result"]["alpha"], 0.43, "derived alpha is used at two decimals");
}

#[test]
fn sweep_over_printed_metrics_selects_ten_percent() {
    let out = run(&["sweep", "--metrics", &fixture("vlm_auto_metrics.csv"), "--grid", "0.05,0.10,0.5,0.7", "--alpha", "0.43"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["result"]["beta_star"], 0.1);
    assert_eq!(v["result"]["grp_star_rounded"], 64.1);
}

#[test]
fn grp_breakdown_of_metrics_file() {
    let v = json(&run(&["grp", "--metrics", &fixture("vlm_auto_metrics.csv")]));
    let models = v["result"]["models"].as_array().unwrap();
    assert_eq!(models.len(), 6);
    assert_eq!(models[0]["model"], "SEA-Gemma-3 10%");
}

#[test]
fn merge_round_trip_and_dry_run() {
    let dir = tempfile::tempdir().unwrap();
    let g = checkpoint(dir.path(), "g.safetensors", &[0.0, 2.0, 4.0]);
    let r = checkpoint(dir.path(), "r.safetensors", &[4.0, 2.0, 0.0]);
    let out_path = dir.path().join("m.safetensors");
    let out = out_path.to_string_lossy().into_owned();

    let dry = run(&["--dry-run", "merge", "--global", &g, "--regional", &r, "--beta", "0.25", "--out", &out]);
    assert!(dry.status.success());
    assert_eq!(json(&dry)["dry_run"], true);
    assert!(!out_path.exists(), "dry run wrote a checkpoint");

    let report = dir.path().join("merge.txt");
    let done = run(&[
        "merge", "--global", &g, "--regional", &r, "--beta", "0.25", "--out", &out,
        "--report", &report.to_string_lossy(),
    ]);
    assert!(done.status.success());
    let merged = load_checkpoint(&out_path).unwrap();
    assert_eq!(merged.get("w").unwrap().to_f64_vec().unwrap(), vec![1.0, 2.0, 3.0]);
    assert!(std::fs::read_to_string(report).unwrap().contains("beta = 0.25"));
}

#[test]
fn config_file_layers_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "alpha = 0.5\n\n[grp]\nq_global = 80.0\nq_regional = 40.0\n").unwrap();
    let cfg = cfg.to_string_lossy().into_owned();

    let v = json(&run(&["--config", &cfg, "grp"]));
    assert_eq!(v["result"]["grp"], 60.0);
    let v = json(&run(&["--config", &cfg, "--alpha", "0.25", "grp", "--q-regional", "60"]));
    assert_eq!(v["result"]["grp"], 65.0);
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[grp]\nq_globl = 1.0\n").unwrap();
    let out = run(&["--config", &cfg.to_string_lossy(), "grp", "--q-global", "1", "--q-regional", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["status"], "error");
}

#[test]
fn every_problem_is_listed_before_exiting() {
    let out = run(&["merge", "--global", "/nonexistent/g", "--beta", "2", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
    let problems = json(&out)["error"]["problems"].as_array().unwrap().len();
    assert_eq!(problems, 3);
}

#[test]
fn unreadable_checkpoint_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.safetensors");
    std::fs::write(&bad, b"not a checkpoint").unwrap();
    let bad = bad.to_string_lossy().into_owned();
    let out = run(&["merge", "--global", &bad, "--regional", &bad, "--beta", "0.5", "--out", "unused"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn failing_evaluator_is_an_external_error() {
    let dir = tempfile::tempdir().unwrap();
    let g = checkpoint(dir.path(), "g.safetensors", &[0.0]);
    let out = run(&[
        "sweep", "--global", &g, "--regional", &g, "--evaluator", "false", "--grid", "0.5",
        "--out-dir", &dir.path().join("sweep").to_string_lossy(),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn jobs_come_from_the_environment() {
    let out = ggez().env("GGEZ_JOBS", "many").args(["grp", "--q-global", "1", "--q-regional", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "a malformed GGEZ_JOBS is rejected");
    let out = ggez().env("GGEZ_JOBS", "3").args(["grp", "--q-global", "1", "--q-regional", "2"]).output().unwrap();
    assert!(out.status.success());
}
