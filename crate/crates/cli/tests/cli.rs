use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value as Json;

fn model(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../models")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn rwd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rwd"))
        .args(args)
        .env_remove("RWD_LIMITS")
        .output()
        .expect("binary runs")
}

fn records(out: &Output) -> Vec<Json> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("one JSON object per line"))
        .collect()
}

fn stderr_json(out: &Output) -> Json {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().expect("report")).expect("JSON report")
}

#[test]
fn fibonacci_trace() {
    let out = rwd(&["trace", &model("fibonacci.rwm"), "--steps", "9"]);
    assert!(out.status.success());
    let values: Vec<i64> = records(&out).iter().map(|r| r["value"].as_i64().unwrap()).collect();
    assert_eq!(values, [1, 1, 2, 3, 5, 8, 13, 21, 34, 55]);
}

#[test]
fn parallel_trace_matches_sequential() {
    let a = rwd(&["trace", &model("fibonacci.rwm"), "--steps", "200"]);
    let b = rwd(&["trace", &model("fibonacci.rwm"), "--steps", "200", "--parallel"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn associativity_chain_and_non_iterable_step() {
    let out = rwd(&["trace", &model("assoc.rwm"), "--steps", "2", "--terms"]);
    assert!(out.status.success());
    let terms: Vec<String> = records(&out).iter().map(|r| r["term"].as_str().unwrap().to_string()).collect();
    assert_eq!(terms, ["f(a,f(g(b),f(c,d)))", "f(f(a,g(b)),f(c,d))", "f(f(f(a,g(b)),c),d)"]);
    let out = rwd(&["trace", &model("assoc.rwm"), "--steps", "3", "--terms"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step 3"));
}

#[test]
fn csv_output() {
    let out = rwd(&["--format", "csv", "trace", &model("fibonacci.rwm"), "--steps", "3"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "step,value\n0,1\n1,1\n2,2\n3,3\n");
}

#[test]
fn project_reports_agreement() {
    for name in ["fibonacci.rwm", "nonroot.rwm"] {
        let out = rwd(&["project", &model(name)]);
        assert!(out.status.success(), "{name}");
        let report = stderr_json(&out);
        assert_eq!(report["agree"], Json::Bool(true));
        assert_eq!(report["max_abs_diff"], 0);
        let system = String::from_utf8_lossy(&out.stdout);
        assert!(system.contains("transition"), "{system}");
    }
}

#[test]
fn projected_system_is_a_loadable_model() {
    let dir = std::env::temp_dir().join(format!("rwd-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("projected.rwm");
    let out = rwd(&["project", &model("nonroot.rwm"), "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    let a = records(&rwd(&["trace", &model("nonroot.rwm"), "--steps", "8"]));
    let b = records(&rwd(&["trace", path.to_str().unwrap(), "--steps", "8"]));
    let values = |rs: &[Json]| rs.iter().map(|r| r["value"].clone()).collect::<Vec<_>>();
    assert_eq!(values(&a), values(&b));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn embed_round_trip() {
    let out = rwd(&["embed", &model("fibonacci_system.rwm"), "--verify", "20", "--roundtrip"]);
    assert!(out.status.success());
    let report = stderr_json(&out);
    assert_eq!(report["verified"], Json::Bool(true));
    assert_eq!(report["roundtrip"], Json::Bool(true));
}

#[test]
fn reduce_fibonacci() {
    let out = rwd(&["reduce", &model("fibonacci_system.rwm")]);
    assert!(out.status.success());
    let r = &records(&out)[0];
    assert_eq!(r["reducible"], Json::Bool(true));
    assert_eq!(r["depth"], 2);
    for c in r["coefficients"].as_array().unwrap() {
        assert!((c.as_f64().unwrap() - 1.0).abs() <= 1e-9);
    }
    assert_eq!(r["exact"], serde_json::json!(["1", "1"]));
}

#[test]
fn fit_sinusoid() {
    let out = rwd(&["fit", &model("sinusoid.csv"), "--depth", "2"]);
    assert!(out.status.success());
    assert!(records(&out)[0]["residual"].as_f64().unwrap() <= 1e-6);
    let out = rwd(&["fit", &model("sinusoid.csv"), "--depth", "1"]);
    assert!(records(&out)[0]["residual"].as_f64().unwrap() > 1e-3);
}

#[test]
fn check_suite_passes_and_is_deterministic() {
    let a = rwd(&["check", "--suite", "vandermonde", "--cases", "1000"]);
    assert!(a.status.success());
    let r = &records(&a)[0];
    assert_eq!(r["status"], "ok");
    assert_eq!(r["passed"], 1000);
    let b = rwd(&["check", "--suite", "vandermonde", "--cases", "1000", "--parallel"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn mutant_is_caught() {
    let out = rwd(&["check", "--suite", "projection", "--cases", "50", "--mutant"]);
    assert_eq!(out.status.code(), Some(2));
    let r = &records(&out)[0];
    assert_eq!(r["status"], "FAILED");
    assert!(r["counterexample"].as_str().unwrap().contains("rule"));
}

#[test]
fn exit_codes() {
    assert_eq!(rwd(&["eval", "missing.rwm"]).status.code(), Some(1));
    assert_eq!(rwd(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(rwd(&["--help"]).status.code(), Some(0));
    let limited = Command::new(env!("CARGO_BIN_EXE_rwd"))
        .args(["trace", &model("fibonacci.rwm"), "--steps", "9"])
        .env("RWD_LIMITS", "steps=5")
        .output()
        .unwrap();
    assert_eq!(limited.status.code(), Some(3));
}

#[test]
fn malformed_model_reports_position() {
    let path = std::env::temp_dir().join(format!("rwd-bad-{}.rwm", std::process::id()));
    std::fs::write(&path, "signature { a/0, f/2 }\nrule f(x,y => x;\n").unwrap();
    let out = rwd(&["eval", path.to_str().unwrap()]);
    std::fs::remove_file(&path).ok();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2:"));
}
