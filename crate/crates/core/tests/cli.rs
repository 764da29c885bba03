use std::path::Path;
use std::process::{Command, Output};

use schauder::DenseMatrix;
use serde_json::Value;

fn schauder(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schauder"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn haar_writes_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a2.mtx");
    let run = schauder(&["haar", "--k", "2", "--out", path(&out)]);
    assert_eq!(run.status.code(), Some(0));
    let a = DenseMatrix::load(&out).unwrap();
    assert_eq!((a.rows(), a.cols()), (4, 4));
    assert_eq!(a.get(0, 0), 0.5);
    assert_eq!(json(&run)["rows"], 4);
}

#[test]
fn constants_of_identity() {
    let dir = tempfile::tempdir().unwrap();
    let id = dir.path().join("id4.mtx");
    DenseMatrix::identity(4).save(&id).unwrap();
    let run = schauder(&["constants", "--matrix", path(&id)]);
    assert_eq!(run.status.code(), Some(0));
    let v = json(&run);
    assert_eq!(v["dimension"], 4);
    assert!((v["basis"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["unconditional"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["unconditional"]["mode"], "Exact");
}

#[test]
fn csv_output_has_header() {
    let run = schauder(&[
        "--csv",
        "profile",
        "--spectrum",
        "harmonic:100",
        "--delta",
        "2",
        "--ts",
        "0.5,0.1",
    ]);
    assert_eq!(run.status.code(), Some(0));
    let text = String::from_utf8(run.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,count"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn demo_harmonic_certifies_and_exports() {
    let dir = tempfile::tempdir().unwrap();
    let run = schauder(&["demo-harmonic", "--out-dir", path(dir.path())]);
    assert_eq!(
        run.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let v = json(&run);
    assert_eq!(v["planValid"], true);
    assert_eq!(v["riesz"]["verdict"], "NotRiesz");
    assert_eq!(v["unconditionalByLevel"].as_array().unwrap().len(), 3);
    for name in ["plan.json", "F.mtx", "Gstar.mtx", "X.mtx", "U.mtx", "C.mtx"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    let u = DenseMatrix::load(dir.path().join("U.mtx")).unwrap();
    assert!(u.transpose().matmul(&u).unwrap().identity_deviation() < 1e-9);
}

#[test]
fn report_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("lp.json");
    let run = schauder(&[
        "--report",
        path(&report),
        "lp-witness",
        "--lambda1",
        "1",
        "--lambda2",
        "2",
    ]);
    assert_eq!(run.status.code(), Some(0));
    assert!(run.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert!((v["normValue"].as_f64().unwrap() - 1.25).abs() < 1e-12);
}

#[test]
fn validation_failures_exit_two() {
    let geometric = schauder(&["select", "--spectrum", "geometric:0.5:100", "--levels", "3"]);
    assert_eq!(geometric.status.code(), Some(2));
    let ratio = schauder(&[
        "ratio-check",
        "--spectrum",
        "geometric:0.5:100",
        "--tail",
        "50",
    ]);
    assert_eq!(ratio.status.code(), Some(2));
    assert_eq!(json(&ratio)["passes"], false);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(schauder(&["haar", "--k", "0"]).status.code(), Some(1));
    assert_eq!(schauder(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(schauder(&["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_matrix_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mtx");
    std::fs::write(&bad, "2 2\n1 0\n0 x\n").unwrap();
    let run = schauder(&["constants", "--matrix", path(&bad)]);
    assert_eq!(run.status.code(), Some(1));
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn singular_matrix_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let sing = dir.path().join("sing.mtx");
    DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]])
        .unwrap()
        .save(&sing)
        .unwrap();
    let run = schauder(&["constants", "--matrix", path(&sing)]);
    assert_eq!(run.status.code(), Some(1));
}
