use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sylow-stats"))
        .args(args)
        .env_remove("SYLOW_STATS_PRECISION")
        .env_remove("SYLOW_STATS_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn header_records_defaults() {
    let v = json(&run(&["gamma", "--p", "3", "--n", "6"]));
    let h = &v["header"];
    assert_eq!(h["p"], 3);
    assert_eq!(h["n"], 6);
    assert_eq!(h["mode"], "exact");
    assert_eq!(h["precision"], 256);
    assert_eq!(h["seed"], 1);
    assert!(h["toolVersion"].is_string());
    assert_eq!(v["consistent"], true);
}

#[test]
fn big_integers_are_strings() {
    let v = json(&run(&["table", "--p", "5", "--n", "6"]));
    let top = v["h"][6][6].as_str().unwrap();
    assert!(top.len() > 20, "{top}");
    assert!(top.chars().all(|c| c.is_ascii_digit()));
}

#[test]
fn exact_pmf_printed_as_fractions() {
    let v = json(&run(&["stats", "--p", "2", "--n-list", "3"]));
    assert_eq!(v["pmf"][0]["pmf"], serde_json::json!(["1/20", "1/2", "2/5", "1/20"]));
    assert_eq!(v["moments"][0]["k0"], 1);
}

#[test]
fn csv_is_a_projection() {
    let out = run(&["census", "--p", "3", "--n", "2", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("toolVersion,p,mode,precision,seed,"));
    assert_eq!(lines.count(), 17);
}

#[test]
fn env_precision_override() {
    let out = Command::new(env!("CARGO_BIN_EXE_sylow-stats"))
        .args(["cp", "--p", "2"])
        .env("SYLOW_STATS_PRECISION", "64")
        .output()
        .unwrap();
    assert_eq!(json(&out)["header"]["precision"], 64);
}

#[test]
fn output_file() {
    let path = std::env::temp_dir().join(format!("sylow-stats-{}.json", std::process::id()));
    let out = run(&["cp", "--p", "3", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).ok();
    assert!(v["cp"].as_str().unwrap().starts_with("8.84183658"));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["table", "--p", "2"]).status.code(), Some(2));
    assert_eq!(run(&["stats", "--p", "2", "--n", "4", "--precision", "77"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(run(&["census", "--p", "2", "--n", "6"]).status.code(), Some(3));
}
