//! End-to-end checks of the binary: exit codes, file outputs, flags.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracrothe"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

const GOOD: &str = r#"{
  "delay": 1.0,
  "horizon": 2.0,
  "subdivisions": 16,
  "terms": [{"a": 1.0, "alpha": 0.5}],
  "space": {"interior_nodes": 8, "length": 1.0},
  "history": {"preset": "sine_mode"},
  "forcing": {"preset": "identity_delay"},
  "output": {}
}"#;

#[test]
fn solve_writes_outputs_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), GOOD);
    let status = bin()
        .args(["solve", "--config"])
        .arg(&config)
        .arg("--out-dir")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,x_1,"));
    assert_eq!(csv.lines().count(), 16 + 32 + 2); // header + rows j = -n..m
    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("diagnostics.json")).unwrap())
            .unwrap();
    assert!(diag["max_step_residual"].as_f64().unwrap() < 1e-10);
    assert!(diag["wall_time_seconds"].as_f64().unwrap() > 0.0);
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &GOOD.replace("\"delay\"", "\"dealy\""));
    let out = bin()
        .args(["solve", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn convergence_writes_study_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), GOOD);
    let status = bin()
        .args(["convergence", "--config"])
        .arg(&config)
        .args(["--levels", "3", "--out-dir"])
        .arg(dir.path())
        .env("FRACROTHE_THREADS", "2")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let study = std::fs::read_to_string(dir.path().join("study.csv")).unwrap();
    assert!(study.starts_with("n,h,cauchy_diff,mms_error,observed_order\n"));
    assert_eq!(study.lines().count(), 4);
}

#[test]
fn convergence_rejects_too_few_levels() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), GOOD);
    let status = bin()
        .args(["convergence", "--config"])
        .arg(&config)
        .args(["--levels", "2"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn verify_passes_on_sound_config() {
    let dir = tempfile::tempdir().unwrap();
    // the a-priori stability check compares n, 2n, 4n; at n = 16 the
    // first difference quotient is still far from resolved
    let config = write_config(dir.path(), &GOOD.replace("\"subdivisions\": 16", "\"subdivisions\": 512"));
    let status = bin()
        .args(["verify", "--config"])
        .arg(&config)
        .arg("--out-dir")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let checks: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verification.json")).unwrap())
            .unwrap();
    assert!(checks.as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn verify_flags_non_accretive_operator_with_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &GOOD.replace(
            r#""interior_nodes": 8, "length": 1.0"#,
            r#""interior_nodes": 8, "length": 1.0, "flip_sign": true"#,
        ),
    );
    let out = bin()
        .args(["verify", "--config"])
        .arg(&config)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("accretivity"));
}

#[test]
fn example51_subcommand_runs() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["example51", "--subdivisions", "32", "--interior-nodes", "16", "--out-dir"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(dir.path().join("trajectory.csv").exists());
}

#[test]
fn version_flag_prints_version() {
    let out = bin().arg("--version").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("fracrothe "));
}
