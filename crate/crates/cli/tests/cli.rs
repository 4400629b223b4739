//! End-to-end tests of the binary: exit codes, output files, determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU32, Ordering};

static COUNTER: AtomicU32 = AtomicU32::new(0);

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "planewave-cli-test-{}-{tag}-{}",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::SeqCst)
    ));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_planewave"))
        .args(args)
        .env_remove("PLANEWAVE_OUT")
        .output()
        .unwrap()
}

const SMALL_RUN: &str = r#"{
    "d": 1, "k": 6, "s": 2.0, "rho": 1.0, "lambda": 1.0,
    "eps": 0.1, "t_end": 0.5, "seed": 7, "samples": 10
}"#;

#[test]
fn simulate_writes_reports_and_manifest() {
    let dir = scratch_dir("simulate");
    let cfg = write_config(&dir, "run.json", SMALL_RUN);
    let out_dir = dir.join("out");
    let out = run(&[
        "--out",
        out_dir.to_str().unwrap(),
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    for o in outputs {
        assert!(Path::new(o.as_str().unwrap()).exists(), "{o}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("drift_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["config"]["seed"], 7);
    assert_eq!(report["coords"], "normal");
    let csv = fs::read_to_string(out_dir.join("drift_series.csv")).unwrap();
    assert!(csv.starts_with("t,D,xi_norm,orbital,l2_residual,energy_residual,momentum_residual"));
}

#[test]
fn simulate_is_byte_deterministic() {
    let dir = scratch_dir("determinism");
    let cfg = write_config(&dir, "run.json", SMALL_RUN);
    let (out_a, out_b) = (dir.join("a"), dir.join("b"));
    for out in [&out_a, &out_b] {
        let st = run(&[
            "--out",
            out.to_str().unwrap(),
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
        ]);
        assert!(st.status.success());
    }
    let a = fs::read(out_a.join("drift_series.csv")).unwrap();
    let b = fs::read(out_b.join("drift_series.csv")).unwrap();
    assert_eq!(a, b, "CSV output must be byte identical");
    let ja = fs::read(out_a.join("drift_report.json")).unwrap();
    let jb = fs::read(out_b.join("drift_report.json")).unwrap();
    assert_eq!(ja, jb);
}

#[test]
fn simulate_rejects_chart_violation_with_exit_2() {
    let dir = scratch_dir("chart");
    let cfg = write_config(
        &dir,
        "bad.json",
        r#"{"d":1,"k":6,"s":2.0,"rho":1.0,"lambda":1.0,"eps":0.6,"t_end":1.0,"seed":1}"#,
    );
    let out = run(&[
        "--out",
        dir.join("out").to_str().unwrap(),
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("chart"), "stderr: {stderr}");
}

#[test]
fn simulate_rejects_unknown_keys() {
    let dir = scratch_dir("unknown");
    let cfg = write_config(
        &dir,
        "typo.json",
        r#"{"d":1,"k":6,"s":2.0,"rho":1.0,"lambda":1.0,"eps":0.1,"t_end":1.0,"seed":1,"epz":0.2}"#,
    );
    let out = run(&[
        "--out",
        dir.join("out").to_str().unwrap(),
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

const UNSTABLE_RUN: &str = r#"{
    "d": 1, "k": 8, "s": 2.0, "rho": 1.0, "lambda": -1.0,
    "eps": 0.001, "t_end": 4.0, "seed": 3, "samples": 40
}"#;

#[test]
fn unstable_run_exit_codes() {
    let dir = scratch_dir("unstable");
    let cfg = write_config(&dir, "focusing.json", UNSTABLE_RUN);
    let out = run(&[
        "--out",
        dir.join("o1").to_str().unwrap(),
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");

    let out = run(&[
        "--out",
        dir.join("o2").to_str().unwrap(),
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--allow-instability",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.join("o2").join("drift_report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["coords"], "zero_mode");
    assert_eq!(report["flags"]["unstable_regime"], true);
}

#[test]
fn scan_writes_certificates() {
    let dir = scratch_dir("scan");
    let cfg = write_config(
        &dir,
        "scan.json",
        r#"{"rho_values":[1.0],"lambda":1.0,"r":2,"shell_cutoff":5,"alpha":2.0,"gamma_floor":1e-6}"#,
    );
    let out_dir = dir.join("out");
    let out = run(&[
        "--out",
        out_dir.to_str().unwrap(),
        "scan",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let csv = fs::read_to_string(out_dir.join("certificates.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "rho,r,cutoff,alpha,gamma_hat,worst_m,worst_n,worst_value,pass"
    );
    let row = lines.next().unwrap();
    assert!(row.ends_with(",1"), "single rho must pass: {row}");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("certificates.json")).unwrap())
            .unwrap();
    assert_eq!(json["pass_fraction"], 1.0);
    assert!(out_dir.join("manifest.json").exists());
}

#[test]
fn scan_rejects_empty_and_degenerate_configs() {
    let dir = scratch_dir("scanbad");
    let empty = write_config(
        &dir,
        "empty.json",
        r#"{"rho_values":[],"lambda":1.0,"r":2,"shell_cutoff":5,"alpha":2.0,"gamma_floor":1e-6}"#,
    );
    let out = run(&["scan", "--config", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let no_shells = write_config(
        &dir,
        "noshells.json",
        r#"{"rho_values":[1.0],"lambda":1.0,"r":2,"shell_cutoff":0,"alpha":2.0,"gamma_floor":1e-6}"#,
    );
    let out = run(&["scan", "--config", no_shells.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes_and_is_deterministic() {
    let a = run(&["verify"]);
    assert_eq!(a.status.code(), Some(0));
    let b = run(&["verify"]);
    assert_eq!(a.stdout, b.stdout, "verify output must be deterministic");
    let text = String::from_utf8_lossy(&a.stdout);
    assert!(text.contains("[PASS] chain round trip"));
    assert!(text.contains("[PASS] frequency asymptotics"));
}

#[test]
fn verify_fault_injection_fails_with_name() {
    let out = run(&["verify", "--fault", "perturb-sn"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("diagonalization residual"),
        "stderr: {stderr}"
    );
}

#[test]
fn zero_perturbation_run_has_flat_drift_column() {
    let dir = scratch_dir("zero-eps");
    let cfg = write_config(
        &dir,
        "flat.json",
        r#"{"d":1,"k":6,"s":2.0,"rho":1.0,"lambda":1.0,"eps":0.0,"t_end":1.0,"seed":1,"samples":8}"#,
    );
    let out_dir = dir.join("out");
    let out = run(&[
        "--out",
        out_dir.to_str().unwrap(),
        "--threads",
        "1",
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let csv = fs::read_to_string(out_dir.join("drift_series.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let d_column = line.split(',').nth(1).unwrap();
        assert_eq!(d_column.parse::<f64>().unwrap(), 0.0, "line {line}");
    }
}

#[test]
fn out_dir_env_variable_is_used() {
    let dir = scratch_dir("envvar");
    let cfg = write_config(&dir, "run.json", SMALL_RUN);
    let out_dir = dir.join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_planewave"))
        .args(["simulate", "--config", cfg.to_str().unwrap()])
        .env("PLANEWAVE_OUT", &out_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out_dir.join("manifest.json").exists());
}
