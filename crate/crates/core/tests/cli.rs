use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn coalition(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coalition")).args(args).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn write_model(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const PAIRS: &str = r#"{"n": 4, "type": "expression", "ast": {"op": "add", "args": [
    {"op": "mul", "args": [{"var": 0}, {"var": 1}]},
    {"op": "mul", "args": [{"var": 2}, {"var": 3}]}]}}"#;

const ADDITIVE: &str = r#"{"n": 3, "type": "expression", "ast": {"op": "add", "args": [{"var": 0}, {"var": 1}, {"var": 2}]}}"#;

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for p in [&a, &b] {
        let o = coalition(&["generate", "addmul", "200", "--seed", "7", "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 200);
    assert_eq!(text, fs::read_to_string(&b).unwrap());

    let o = coalition(&["generate", "andor", "0"]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());

    assert_eq!(coalition(&["generate", "mulmul", "3"]).status.code(), Some(2));
}

#[test]
fn exact_reports() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = write_model(dir.path(), "pairs.json", PAIRS);
    let v = stdout_json(&coalition(&["exact", "--model", &pairs, "--target", "all", "--components"]));
    assert!((v["t"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert!(v["components"]["identity_error"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["config"]["command"], "exact");
    // The grand coalition ties with the two products and has fewer blocks.
    assert_eq!(v["omega_max"], serde_json::json!([[0, 1, 2, 3]]));

    let add = write_model(dir.path(), "add.json", ADDITIVE);
    let v = stdout_json(&coalition(&["exact", "--model", &add, "--target", "0-2", "--semantics", "unit"]));
    assert!(v["t"].as_f64().unwrap().abs() < 1e-12);

    let o = coalition(&["exact", "--model", &pairs, "--target", "all", "--max-general-target", "2"]);
    assert_eq!(o.status.code(), Some(3));

    let bad = write_model(dir.path(), "bad.json", "{\"n\": 2}");
    assert_eq!(coalition(&["exact", "--model", &bad, "--target", "all"]).status.code(), Some(2));
    assert_eq!(coalition(&["exact", "--target", "all"]).status.code(), Some(2));
}

#[test]
fn estimate_is_deterministic_and_writes_traces() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = write_model(dir.path(), "pairs.json", PAIRS);
    let args = [
        "estimate", "--model", &pairs, "--target", "all", "--seed", "11", "--epochs", "20", "--subset-samples", "32",
    ];
    let a = coalition(&args);
    let b = coalition(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = stdout_json(&a);
    assert_eq!(v["config"]["seed"], 11);
    assert_eq!(v["omega_max"], serde_json::json!([[0, 1], [2, 3]]));

    let out = dir.path().join("run");
    let o = coalition(&[&args[..], &["--out", out.to_str().unwrap()]].concat());
    assert!(o.status.success());
    let trace = fs::read_to_string(out.join("trace_max.csv")).unwrap();
    let mut lines = trace.lines();
    assert!(lines.next().unwrap().starts_with("# config={"));
    assert_eq!(lines.next().unwrap(), "epoch,L_estimate,p_1,p_2,p_3");
    assert_eq!(lines.count(), 21);
    assert!(out.join("trace_min.csv").exists() && out.join("estimate.json").exists());
}

#[test]
fn eval_rows_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("andor.jsonl");
    let data = data.to_str().unwrap();
    assert!(coalition(&["generate", "andor", "6", "--seed", "2", "--out", data]).status.success());

    let o = coalition(&["eval", "--method", "baseline2", "--dataset", data]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config="));
    assert_eq!(lines[1], "method,andor");
    assert_eq!(lines[2], "baseline2,1.000");

    let o = coalition(&["eval", "--method", "all", "--dataset", data, "--epochs", "10", "--subset-samples", "16"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 5);
    assert_eq!(coalition(&["eval", "--method", "baseline3", "--dataset", data]).status.code(), Some(2));

    let out = dir.path().join("curve");
    let o = coalition(&[
        "error-curve", "--dataset", data, "--checkpoints", "0,5,10", "--epochs", "10", "--subset-samples", "16",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let curve = fs::read_to_string(out.join("error_curve.csv")).unwrap();
    assert_eq!(curve.lines().nth(1), Some("game_id,x,y"));
    assert_eq!(curve.lines().count(), 2 + 6 * 3);

    let o = coalition(&[
        "instability", "--dataset", data, "--budgets", "8,16", "--repeats", "2", "--epochs", "5",
    ]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().nth(1), Some("budget,median,degenerate"));

    let o = coalition(&["trace", "--dataset", data, "--index", "1", "--epochs", "10"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 2 + 11);
    assert_eq!(coalition(&["trace", "--dataset", data, "--index", "99"]).status.code(), Some(2));
}

#[test]
fn additive_estimate_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let add = write_model(dir.path(), "add.json", ADDITIVE);
    // Exclusive T of an additive game is exactly zero, so repeated estimates are all zero.
    let o = coalition(&["estimate", "--model", &add, "--target", "all", "--epochs", "3", "--subset-samples", "4"]);
    let v = stdout_json(&o);
    assert_eq!(v["t"].as_f64().unwrap(), 0.0);
}

#[test]
fn workers_do_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("exp.jsonl");
    let data = data.to_str().unwrap();
    assert!(coalition(&["generate", "exp", "4", "--out", data]).status.success());
    let run = |w: &str| {
        let o = coalition(&["eval", "--method", "ours", "--dataset", data, "--epochs", "10", "--subset-samples", "16", "--workers", w]);
        assert!(o.status.success());
        // Drop the config line, which records the worker count.
        String::from_utf8(o.stdout).unwrap().lines().skip(1).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(run("1"), run("3"));
}
