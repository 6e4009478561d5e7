use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn tplcov(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tplcov"))
        .args(args)
        .current_dir(dir)
        .env_remove("TPLCOV_THREADS")
        .output()
        .unwrap()
}

fn simulate(dir: &Path, seed: &str) {
    let out = tplcov(
        &["simulate", "--structure", "block", "--p", "6", "--n", "80", "--tau", "0.5", "--seed", seed, "--out", "x.csv", "--truth", "truth.csv"],
        dir,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_then_estimate() {
    let dir = TempDir::new().unwrap();
    simulate(dir.path(), "3");
    let data = fs::read_to_string(dir.path().join("x.csv")).unwrap();
    assert_eq!(data.lines().count(), 81);
    assert!(data.starts_with("x1,x2,x3,x4,x5,x6\n"));

    let out = tplcov(&["estimate", "--input", "x.csv", "--output", "theta.csv", "--alpha", "0.1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["schema"], 1);
    assert_eq!(summary["mode"], "alpha");
    assert_eq!(summary["p"], 6);
    assert_eq!(summary["n"], 80);
    assert!(summary["kkt_residual"].as_f64().unwrap() <= 1e-6);
    assert_eq!(summary["converged"], true);

    let theta = fs::read_to_string(dir.path().join("theta.csv")).unwrap();
    let mut lines = theta.lines();
    assert_eq!(lines.next(), Some("j,k,value"));
    let rows: Vec<&str> = lines.collect();
    let diag = rows.iter().filter(|l| {
        let f: Vec<&str> = l.split(',').collect();
        f[0] == f[1]
    });
    assert_eq!(diag.count(), 6);
    assert_eq!(rows.len(), 6 + summary["support_size"].as_u64().unwrap() as usize);
}

#[test]
fn outputs_are_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        simulate(d.path(), "9");
        let out = tplcov(
            &["estimate", "--input", "x.csv", "--output", "theta.csv", "--format", "dense", "--summary", "s.json"],
            d.path(),
        );
        assert_eq!(out.status.code(), Some(0));
    }
    for f in ["x.csv", "truth.csv", "theta.csv", "s.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let dense = fs::read_to_string(a.path().join("theta.csv")).unwrap();
    assert_eq!(dense.lines().count(), 6);
    assert!(dense.lines().all(|l| l.split(',').count() == 6));
}

#[test]
fn huge_lambda_gives_diagonal() {
    let dir = TempDir::new().unwrap();
    simulate(dir.path(), "1");
    let out = tplcov(&["estimate", "--input", "x.csv", "--output", "t.csv", "--lambda", "1e18"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["mode"], "lambda");
    assert_eq!(summary["support_size"], 0);
    assert_eq!(summary["gamma"], 0.0);
    let t = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(t.lines().count(), 7);
}

#[test]
fn malformed_input_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.csv"), "a,b\n1,2\n3,oops\n").unwrap();
    let out = tplcov(&["estimate", "--input", "bad.csv", "--output", "t.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line 3"), "{msg}");

    let out = tplcov(&["estimate", "--input", "missing.csv", "--output", "t.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn degenerate_column_is_a_numeric_error() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("zero.csv"), "1,0\n2,0\n-1,0\n0.5,0\n").unwrap();
    let out = tplcov(&["estimate", "--input", "zero.csv", "--output", "t.csv"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn usage_errors() {
    let dir = TempDir::new().unwrap();
    simulate(dir.path(), "1");
    for args in [
        vec!["estimate", "--input", "x.csv", "--output", "t.csv", "--alpha", "0.1", "--lambda", "1"],
        vec!["estimate", "--input", "x.csv", "--output", "t.csv", "--alpha", "1.5"],
        vec!["estimate", "--input", "x.csv", "--output", "t.csv", "--lambda", "-2"],
        vec!["simulate", "--structure", "block", "--p", "5", "--n", "10", "--tau", "1.5", "--out", "y.csv"],
        vec!["simulate", "--structure", "star", "--p", "5", "--n", "10", "--tau", "0.5", "--out", "y.csv"],
        vec!["frobnicate"],
    ] {
        let out = tplcov(&args, dir.path());
        assert_eq!(out.status.code(), Some(64), "{args:?}");
    }
    assert_eq!(tplcov(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(tplcov(&["--version"], dir.path()).status.code(), Some(0));
}

#[test]
fn benchmark_writes_results_and_respects_thread_env() {
    let dir = TempDir::new().unwrap();
    let args = [
        "benchmark", "--structure", "block,random", "--p", "6", "--n", "40", "--tau", "0.5", "--reps", "4", "--seed", "7",
    ];
    let mut runs = Vec::new();
    for threads in ["1", "3"] {
        let sub = dir.path().join(threads);
        fs::create_dir(&sub).unwrap();
        let out = Command::new(env!("CARGO_BIN_EXE_tplcov"))
            .args(args)
            .args(["--out-dir", sub.to_str().unwrap()])
            .env("TPLCOV_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let table = String::from_utf8(out.stdout).unwrap();
        assert!(table.contains("block") && table.contains("random"));
        runs.push((
            fs::read(sub.join("results.csv")).unwrap(),
            fs::read(sub.join("replicates.csv")).unwrap(),
        ));
    }
    assert_eq!(runs[0], runs[1]);
    let results = String::from_utf8(runs[0].0.clone()).unwrap();
    assert_eq!(results.lines().count(), 3);
}
