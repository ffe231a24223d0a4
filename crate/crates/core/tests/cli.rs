use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poset-cstar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_json(dir: &Path, name: &str, value: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, value.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

fn lambda() -> Value {
    json!({ "elements": ["a", "c", "d"], "leq": [["a", "c"], ["a", "d"]] })
}

#[test]
fn decompose_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_json(dir.path(), "lambda.json", &lambda());
    let out = bin(&["decompose", &path]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["command"], "decompose");
    assert_eq!(r["pass"], true);
    assert_eq!(r["members"], json!([["a", "c"], ["a", "d"]]));
}

#[test]
fn malformed_poset_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{ \"elements\": [").unwrap();
    let out = bin(&["decompose", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn cyclic_order_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cyclic = json!({ "elements": ["a", "b"], "leq": [["a", "b"], ["b", "a"]] });
    let path = write_json(dir.path(), "cyclic.json", &cyclic);
    assert_eq!(bin(&["decompose", &path]).status.code(), Some(2));
}

#[test]
fn topology_of_poset_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_json(dir.path(), "lambda.json", &lambda());
    let out = bin(&["topology", &path]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["is_T1"], true);
    assert_eq!(r["index_count"], 2);
    assert_eq!(r["isolated_points"], json!([0, 1]));
}

#[test]
fn topology_of_circle() {
    let out = bin(&["topology", "--example", "circle", "--resolution", "16", "--depth", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["is_T1"], true);
    assert_eq!(r["base_set_routes_agree"], true);
    assert_eq!(r["isolated_points"], json!([]));
}

#[test]
fn norms_of_one_plus_shift() {
    let out = bin(&["norms", "--poly", "1 + T", "-N", "256", "--grid", "4096"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!((r["symbol_norm"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert!(r["matrix_norm"].as_f64().unwrap() <= 2.0 + 1e-12);
}

#[test]
fn norms_rejects_coarse_grid() {
    let out = bin(&["norms", "--poly", "1 + T^3 + T^4", "-N", "64", "--grid", "8"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_json(dir.path(), "lambda.json", &lambda());
    let target = dir.path().join("report.json");
    let out = bin(&["decompose", &input, "--output", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(r["command"], "decompose");
}

#[test]
fn embedding_config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({ "resolution": 16, "depth": 4, "primes": [2, 3, 5], "trunc": 512, "grid": 4096, "sums": 10 });
    let path = write_json(dir.path(), "embedding.json", &config);
    let out = bin(&["verify-embedding", "--config", &path, "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["pass"], true);
    assert_eq!(r["config"]["seed"], 3);
    assert_eq!(r["config"]["resolution"], 16);
}

#[test]
fn embedding_unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_json(dir.path(), "embedding.json", &json!({ "depht": 4 }));
    assert_eq!(bin(&["verify-embedding", "--config", &path]).status.code(), Some(2));
}
