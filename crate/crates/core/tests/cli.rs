use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn oneshot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oneshot")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    let out = oneshot(&["export", "--random", "5,2,3,0.4", "--seed", "2", "--out", path(&good)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = oneshot(&["check", "--problem", path(&good)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["is_valid"], Value::Bool(true));

    let bad = dir.path().join("rho.json");
    std::fs::write(&bad, r#"{"n_u":1,"n_sigma":1,"n_f":1,"B":[1.5],"M":[1],"H":[1],"F":[0]}"#).unwrap();
    let out = oneshot(&["check", "--problem", path(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["is_valid"], Value::Bool(false));

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{ not json").unwrap();
    assert_eq!(oneshot(&["check", "--problem", path(&broken)]).status.code(), Some(2));
    assert_eq!(oneshot(&["check", "--problem", path(&dir.path().join("missing.json"))]).status.code(), Some(2));
}

#[test]
fn check_complex_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("c.json");
    let z = |re: f64, im: f64| format!(r#"{{"re":{re},"im":{im}}}"#);
    let body = format!(
        r#"{{"n_u":1,"n_sigma":1,"n_f":1,"complex":{{"B":[{}],"M":[{}],"H":[{}],"F":[{}]}}}}"#,
        z(0.3, 0.4),
        z(1.0, 0.0),
        z(0.0, 1.0),
        z(0.0, 0.0)
    );
    std::fs::write(&f, body).unwrap();
    let out = oneshot(&["check", "--problem", path(&f)]);
    assert_eq!(out.status.code(), Some(0));
    assert!((json(&out)["spectral_radius_b"].as_f64().unwrap() - 0.5).abs() < 1e-14);
}

#[test]
fn bound_scalar_values() {
    let out = oneshot(&["bound", "--scalar", "0,1,1", "--method", "gd"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["value"].as_f64(), Some(2.0));
    assert_eq!(v["exact"]["value"].as_f64(), Some(2.0));

    let v = json(&oneshot(&["bound", "--scalar", "0,1,1", "--method", "skshot", "--k", "1"]));
    assert!((v["exact"]["value"].as_f64().unwrap() - 0.6180339887).abs() < 1e-10);
    assert!(v["formula_id"].as_str().unwrap().starts_with("shifted-k1"));
    assert!(v["params"]["theta0"].is_number());

    let v = json(&oneshot(&["bound", "--scalar", "-0.5,1,1", "--method", "kshot", "--k", "3"]));
    assert!(v["value"].as_f64().unwrap() > 0.0);
    assert!(v["exact"]["branch"].is_string());
}

#[test]
fn bound_matrix_file_and_bad_params() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("p.json");
    assert!(oneshot(&["export", "--random", "6,2,4,0.6", "--seed", "5", "--out", path(&f)]).status.success());
    let v = json(&oneshot(&["bound", "--problem", path(&f), "--method", "kshot", "--k", "2"]));
    let value = v["value"].as_f64().unwrap();
    assert!(value.is_finite() && value > 0.0);
    assert!(v["norm_inputs"]["s_bk"].as_f64().unwrap() >= 1.0);

    let out = oneshot(&["bound", "--problem", path(&f), "--method", "kshot", "--k", "2", "--theta0", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let out = oneshot(&["bound", "--problem", path(&f), "--method", "kshot", "--k", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("trace.csv");
    let out = oneshot(&["solve", "--scalar", "0.2,1,1", "--method", "gd", "--tau", "1", "--out", path(&f)]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&f).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,accumulated_inner,cost,grad_norm,err_sigma,status"));
    assert!(csv.trim_end().ends_with(",converged"));
    let summary: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(summary["status"], "converged");

    let out = oneshot(&["solve", "--scalar", "0.2,1,1", "--method", "kshot", "--k", "3", "--tau", "0.5", "--max-outer", "4"]);
    let csv = stdout(&out);
    let inner: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(inner, vec!["0", "1", "4", "7", "10"]);
}

#[test]
fn solve_with_line_search() {
    let out = oneshot(&["solve", "--scalar", "0.2,1,1", "--method", "gd", "--tau", "100", "--line-search-first"]);
    assert!(out.status.success());
    let summary: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(summary["tau"].as_f64().unwrap() < 100.0);
}

#[test]
fn sweep_outputs_are_reproducible() {
    let run = |dir: &Path| {
        let out = oneshot(&[
            "sweep", "--random", "4,2,3,0.5", "--seed", "3", "--method", "gd,kshot", "--k", "1,2", "--tau", "0.05,0.1",
            "--out", path(dir),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(a.path());
    run(b.path());
    let mut names: Vec<String> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names.len(), 2 + 6);
    for n in &names {
        assert_eq!(std::fs::read(a.path().join(n)).unwrap(), std::fs::read(b.path().join(n)).unwrap(), "{n}");
    }
    let summary = std::fs::read_to_string(a.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("method,k,tau,status,outer_iters,final_cost,rho\n"));
    assert_eq!(summary.lines().count(), 7);
    let bounds = std::fs::read_to_string(a.path().join("bounds.csv")).unwrap();
    assert_eq!(bounds.lines().count(), 4);
}

#[test]
fn scalar_region_csv() {
    let out = oneshot(&["scalar-region", "--k", "2", "--b-min", "0", "--b-max", "0", "--b-points", "1"]);
    assert!(out.status.success());
    let csv = stdout(&out);
    let thresholds: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert_eq!(thresholds, vec![2.0, 1.0, 2.0, 1.0]);
    let out = oneshot(&["scalar-region", "--b-min", "-1", "--b-max", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn source_arguments_are_exclusive() {
    let out = oneshot(&["check", "--scalar", "0.1,1,1", "--random", "3,1,2,0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = oneshot(&["check", "--scalar", "0.1,1"]);
    assert_eq!(out.status.code(), Some(1));
}
