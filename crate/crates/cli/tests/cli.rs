use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hybrid-cf"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_line(bytes: &[u8]) -> serde_json::Value {
    let text = String::from_utf8_lossy(bytes);
    let line = text.lines().last().expect("one output line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not json: {line}: {e}"))
}

fn synth_into(dir: &Path) -> String {
    let data = dir.join("idm.csv");
    let out = run(&[
        "synth",
        "--model",
        "IDM",
        "--pairs",
        "6",
        "--horizon",
        "8",
        "--seed",
        "4",
        "--output",
        data.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(json_line(&out.stdout)["status"], "ok");
    assert!(dir.join("idm.truth.toml").exists());
    data.to_str().unwrap().to_string()
}

#[test]
fn synth_then_calibrate() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_into(dir.path());
    let out_dir = dir.path().join("res");
    let out = run(&[
        "calibrate",
        "--dataset",
        &data,
        "--models",
        "IDM,OVM",
        "--particles",
        "400",
        "--folds",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "metrics.csv",
        "metrics_folds.csv",
        "normalized.csv",
        "shares.csv",
        "posterior.csv",
        "summary.toml",
    ] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
}

#[test]
fn worker_count_does_not_change_reports() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_into(dir.path());
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let out_dir = dir.path().join(format!("w{workers}"));
        let out = run(&[
            "calibrate",
            "--dataset",
            &data,
            "--models",
            "IDM,LLCS",
            "--particles",
            "300",
            "--folds",
            "2",
            "--workers",
            workers,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        outputs.push(out_dir);
    }
    for f in ["metrics.csv", "shares.csv", "posterior.csv", "summary.toml"] {
        let a = std::fs::read(outputs[0].join(f)).unwrap();
        let b = std::fs::read(outputs[1].join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn pairwise_and_evolution() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_into(dir.path());
    let res = dir.path().join("pw");
    let out = run(&[
        "pairwise",
        "--dataset",
        &data,
        "--models",
        "IDM,OVM,GFM",
        "--particles",
        "200",
        "--out",
        res.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(json_line(&out.stdout)["result"]["comparisons"], 3);
    assert!(res.join("pairwise.csv").exists());

    let out = run(&[
        "evolution",
        "--dataset",
        &data,
        "--models",
        "IDM",
        "--particles",
        "200",
        "--pair",
        "synth-002",
        "--out",
        res.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(res.join("evolution.csv").exists());
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "dataset = \"idm.csv\"\nmodels = [\"IDM\"]\nn_particles = 100\nfolds = 1\nout = \"cfg-out\"\n",
    )
    .unwrap();
    let out = run(&[
        "calibrate",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "11",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = std::fs::read_to_string(dir.path().join("cfg-out/summary.toml")).unwrap();
    assert!(summary.contains("seed = 11"));
}

#[test]
fn failures_print_a_json_error() {
    let out = run(&["calibrate", "--dataset", "/nonexistent/file.csv"]);
    assert!(!out.status.success());
    let v = json_line(&out.stderr);
    assert_eq!(v["status"], "error");
    assert_eq!(v["kind"], "io");

    let out = run(&["calibrate", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_line(&out.stderr)["kind"], "usage");

    let dir = tempfile::tempdir().unwrap();
    let data = synth_into(dir.path());
    let out = run(&[
        "evolution",
        "--dataset",
        &data,
        "--models",
        "IDM",
        "--pair",
        "missing",
    ]);
    assert_eq!(json_line(&out.stderr)["kind"], "unknown_pair");
}
