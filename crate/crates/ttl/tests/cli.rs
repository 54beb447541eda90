use std::path::Path;
use std::process::Command;

use serde_json::Value;

const SPLIT4: &str = r#""quadspace": {"p": 3, "gram": [[0,1,0,0],[1,0,0,0],[0,0,0,1],[0,0,1,0]], "v1": [1,1,0,0]}"#;

fn ttl(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ttl")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into(), String::from_utf8_lossy(&out.stderr).into())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn without_timing(mut v: Value) -> Value {
    if let Some(cases) = v["cases"].as_array_mut() {
        for c in cases {
            c.as_object_mut().unwrap().remove("ms");
        }
    }
    v
}

#[test]
fn density_of_basic_function() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "d.json", &format!(r#"{{{SPLIT4}, "phi": "basic", "grid": {{"a": [1]}}}}"#));
    let (code, out, _) = ttl(&["density", "--config", &cfg]);
    assert_eq!(code, 0);
    let r: Value = serde_json::from_str(&out).unwrap();
    let c = &r["cases"][0];
    assert_eq!(c["value"], "8/9");
    assert_eq!(c["stabilized_at"], 1);
    assert_eq!(c["certified"], true);
    assert_eq!(r["pass"], true);
}

#[test]
fn fundamental_lemma_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fl.json", &format!(r#"{{{SPLIT4}, "phi": "basic"}}"#));
    let out = dir.path().join("r.json");
    let (code, _, _) = ttl(&["verify-fl", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(r["suite"], "verify-fl");
    let id = r["cases"].as_array().unwrap().iter().find(|c| c["id"] == "identity/a=1").unwrap();
    assert_eq!(id["lhs"]["exact"], "(8/9)");
    assert_eq!(id["lhs"], id["rhs"]);
    assert_eq!(id["equal"], true);
}

#[test]
fn config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad_gram = write(dir.path(), "g.json", r#"{"quadspace": {"p": 3, "gram": [[0,3],[3,0,0]], "v1": [1,1]}}"#);
    assert_eq!(ttl(&["density", "--config", &bad_gram]).0, 3);
    let not_unimodular = write(
        dir.path(),
        "u.json",
        r#"{"quadspace": {"p": 3, "gram": [[0,3,0],[3,0,0],[0,0,2]], "v1": [0,0,1]}}"#,
    );
    assert_eq!(ttl(&["density", "--config", &not_unimodular]).0, 3);
    let junk = write(dir.path(), "j.toml", "this is = = not toml");
    assert_eq!(ttl(&["density", "--config", &junk]).0, 3);
    assert_eq!(ttl(&["density", "--config", "/nonexistent/job.json"]).0, 3);
    let clash = write(dir.path(), "c.json", &format!(r#"{{"command": "lfactor", {SPLIT4}}}"#));
    assert_eq!(ttl(&["density", "--config", &clash]).0, 3);
    assert_eq!(ttl(&["no-such-command", "--config", &clash]).0, 3);
}

#[test]
fn exit_codes_for_failed_cases() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "n.json", &format!(r#"{{{SPLIT4}, "grid": {{"a": [9]}}}}"#));
    assert_eq!(ttl(&["density", "--config", &cfg, "--m-max", "1"]).0, 2);
    assert_eq!(ttl(&["density", "--config", &cfg, "--m-max", "2"]).0, 0);
    // the joint fibre through v1 is singular
    let sing = write(dir.path(), "s.json", &format!(r#"{{{SPLIT4}, "grid": {{"a": [1], "xi": [2]}}}}"#));
    assert_eq!(ttl(&["density", "--config", &sing]).0, 1);
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let toml = "seed = 11\ncatalog = { dim = 3, p = 5 }\nphi = { random = { count = 6 } }\ngrid = { a = \"standard\" }\n";
    let cfg = write(dir.path(), "t.toml", toml);
    let run = |threads: &str| {
        let (code, out, _) = ttl(&["verify-transfer", "--config", &cfg, "--threads", threads]);
        assert_eq!(code, 0);
        without_timing(serde_json::from_str(&out).unwrap())
    };
    let a = run("1");
    assert_eq!(a, run("1"));
    assert_eq!(a, run("3"));
    assert_eq!(a["cases"].as_array().unwrap().len(), 60);
}

#[test]
fn toml_and_json_configs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "a.toml", "catalog = { dim = 4, p = 3 }\n[grid]\na = [1, \"1/3\", 3]\n");
    let j = write(dir.path(), "a.json", r#"{"catalog": {"dim": 4, "p": 3}, "grid": {"a": [1, "1/3", 3]}}"#);
    let (c1, o1, _) = ttl(&["verify-fl", "--config", &t]);
    let (c2, o2, _) = ttl(&["verify-fl", "--config", &j]);
    assert_eq!((c1, c2), (0, 0));
    let (a, b): (Value, Value) = (serde_json::from_str(&o1).unwrap(), serde_json::from_str(&o2).unwrap());
    assert_eq!(without_timing(a), without_timing(b));
}

#[test]
fn explicit_function_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let phi = r#"{"n": 4, "cells": [{"center": ["1/3", 0, 1, 0], "level": 0, "coeff": {"terms": [{"order": 4, "exp": 1, "num": 2, "den": 3, "sqrtp": 0}]}}]}"#;
    let cfg = write(dir.path(), "x.json", &format!(r#"{{{SPLIT4}, "phi": {phi}, "grid": {{"a": [1, 3]}}}}"#));
    let (code, out, err) = ttl(&["verify-transfer", "--config", &cfg]);
    assert_eq!(code, 0, "{err}");
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["cases"].as_array().unwrap().len(), 2);
}
