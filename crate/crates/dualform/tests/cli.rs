//! End-to-end runs of the binary: outputs and exit codes for every command.

use std::path::Path;
use std::process::{Command, Output};

fn dualform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualform")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name).display().to_string()
}

#[test]
fn trace_small_circle_csv() {
    let out = dualform(&["trace", "--builtin", "small_circle:0.6", "--grid", "360"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "u0,s0,p0,p1,p2,q0,q1,q2,rank,generic");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 720);
    assert!(rows.iter().all(|r| r.ends_with(",1,true")));
}

#[test]
fn trace_great_circle_collapses() {
    let out = dualform(&["trace", "--builtin", "great_circle", "--grid", "360"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for row in text.lines().skip(1) {
        let f: Vec<f64> = row.split(',').take(8).map(|x| x.parse().unwrap()).collect();
        let q = &f[5..8];
        assert!(q[0].abs() <= 1e-12 && q[1].abs() <= 1e-12 && (q[2].abs() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn trace_default_grid_and_ply() {
    let dir = tempfile::tempdir().unwrap();
    let ply = dir.path().join("q.ply");
    let csv = dir.path().join("q.csv");
    let out = dualform(&[
        "trace",
        "--builtin",
        "small_circle:0.6",
        "--out",
        csv.to_str().unwrap(),
        "--ply",
        ply.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("(default)"));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 513);
    let ply = std::fs::read_to_string(&ply).unwrap();
    assert!(ply.contains("element vertex 512\n"));
}

#[test]
fn trace_usage_errors() {
    assert_eq!(code(&dualform(&["trace"])), 2);
    assert_eq!(code(&dualform(&["trace", "--builtin", "small_circle:1.5"])), 2);
    assert_eq!(code(&dualform(&["trace", "--builtin", "great_circle", "--grid", "0"])), 2);
    assert_eq!(code(&dualform(&["trace", "--builtin", "great_circle", "--bogus"])), 2);
    assert_eq!(code(&dualform(&["trace", "--dsl", "/nonexistent/file.dual"])), 2);
}

#[test]
fn check_exit_codes() {
    let out = dualform(&["check", "--builtin", "clifford_torus", "--samples", "100", "--tol", "1e-6"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], "dualform.run-report/1");
    assert!(v["inverse_duality"]["max_residual"]["value"].as_f64().unwrap() <= 1e-9);

    let out = dualform(&["check", "--builtin", "great_circle"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["inverse_duality"]["vacuous"], 100);

    let out = dualform(&["check", "--builtin", "hyperbolic_circle:0.6"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["inverse_duality"]["max_residual"]["value"].as_f64().unwrap() <= 1e-9);

    // finite differences cannot meet an absurd tolerance: a theorem-check failure
    let out = dualform(&["check", "--builtin", "latitude_torus:0.6,0.8", "--fd-step", "1e-2", "--tol", "1e-14"]);
    assert_eq!(code(&out), 1);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["verdict"], "fail");

    assert_eq!(code(&dualform(&["check", "--builtin", "no_such_variety"])), 2);
}

#[test]
fn check_dsl_file() {
    let out = dualform(&["check", "--dsl", &data("viviani.dual"), "--samples", "30"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn bidual_exit_codes() {
    let out = dualform(&["bidual", "--builtin", "small_circle:0.6", "--grid", "720", "--tol", "1e-3"]);
    assert_eq!(code(&out), 0);

    let out = dualform(&["bidual", "--builtin", "hyperbolic_circle:0.6", "--grid", "720", "--tol", "1e-3"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["bidual"]["target"], "M");

    let out = dualform(&["bidual", "--builtin", "great_circle", "--grid", "64"]);
    assert_eq!(code(&out), 0);

    // coarse finite-difference jets tilt the dual tangent lines
    let out = dualform(&["bidual", "--builtin", "random_trig_curve:1,2,3", "--grid", "64", "--fd-step", "1e-2", "--tol", "1e-9"]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stdout));

    assert_eq!(code(&dualform(&["bidual", "--builtin", "small_circle:0.6", "--tol", "-1"])), 2);
}

#[test]
fn plotdata_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trace.csv");
    assert_eq!(
        code(&dualform(&["trace", "--builtin", "small_circle:0.6", "--grid", "360", "--out", csv.to_str().unwrap()])),
        0
    );
    let out = dualform(&["plotdata", "--input", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 720);
    assert!(text.lines().all(|l| l.split_whitespace().count() == 3));

    let out = dualform(&["plotdata", "--builtin", "clifford_torus", "--grid", "8", "--project", "1,2,4"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let first: Vec<f64> = text.lines().next().unwrap().split_whitespace().map(|x| x.parse().unwrap()).collect();
    assert_eq!(first.len(), 3);

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "u0,s0,p0,p1,p2,q0,q1,q2,rank,generic\n").unwrap();
    let target = dir.path().join("empty.txt");
    let out = dualform(&["plotdata", "--input", empty.to_str().unwrap(), "--out", target.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    assert_eq!(std::fs::read(&target).unwrap().len(), 0);

    assert_eq!(code(&dualform(&["plotdata", "--input", "/nonexistent.csv"])), 2);
    assert_eq!(code(&dualform(&["plotdata", "--input", csv.to_str().unwrap(), "--project", "1,9"])), 2);
}
