//! End-to-end runs of the `croftonkit` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn croftonkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_croftonkit")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn payload(out: &Output) -> Value {
    let mut value = json(out);
    croftonkit::report::strip_wall_time(&mut value);
    value.as_object_mut().unwrap().remove("timing");
    value
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = croftonkit(&["frobulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("frobulate"));
}

#[test]
fn malformed_descriptor_is_a_usage_error() {
    let out = croftonkit(&["chord-cdf", "--body", "ellipsoid:1,x,2", "--samples", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let out = croftonkit(&["hit-dist", "--patch", "cap:3", "--samples", "10"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn overlapping_pair_is_a_runtime_error() {
    let out = croftonkit(&["pair-prob", "--patch", "cap:0", "--patch", "cap:0:1,0,0", "--samples", "1000", "--pairs", "1000"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("overlap"));
}

#[test]
fn chord_cdf_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cdf.csv");
    let report = dir.path().join("cdf.json");
    let out = croftonkit(&[
        "chord-cdf",
        "--body",
        "sphere",
        "--dim",
        "3",
        "--samples",
        "20000",
        "--seed",
        "7",
        "--csv",
        csv.to_str().unwrap(),
        "-o",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("d,cdf,stderr"));
    assert_eq!(lines.count(), 21);
    let value: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(value["config"]["seed"], 7);
    assert_eq!(value["config"]["samples"], 20000);
    assert!(value["config"].get("workers").is_none());
    assert_eq!(value["results"]["chord_cdf"]["points"].as_array().unwrap().len(), 21);
    assert!(value["results"]["chord_cdf"]["mean_length"]["wall_time"].as_f64().unwrap() > 0.0);
}

#[test]
fn independence_reports_table_and_p_value() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("table.csv");
    let out = croftonkit(&["independence", "--cells", "16", "--samples", "20000", "--csv", csv.to_str().unwrap()]);
    let value = json(&out);
    let results = &value["results"];
    assert_eq!(results["dof"], 225);
    let p = results["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 17);
    let total: u64 = text.lines().skip(1).flat_map(|l| l.split(',').skip(1)).map(|c| c.parse::<u64>().unwrap()).sum();
    assert_eq!(total, 20000);
}

#[test]
fn payloads_do_not_depend_on_worker_count() {
    for args in [
        &["chord-cdf", "--body", "ellipsoid:1,1,1.5", "--samples", "30000"][..],
        &["quad-crofton", "--patch", "cap:0.2", "--samples", "20000", "--pairs", "20000"][..],
    ] {
        let one = payload(&croftonkit(&[args, &["--workers", "1"]].concat()));
        let three = payload(&croftonkit(&[args, &["--workers", "3"]].concat()));
        assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&three).unwrap());
    }
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"command": "crofton-area", "body": "cube", "samples": 5000, "seed": 3}"#).unwrap();
    let value = json(&croftonkit(&["crofton-area", "--config", config.to_str().unwrap(), "--seed", "11"]));
    assert_eq!(value["config"]["seed"], 11);
    assert_eq!(value["config"]["samples"], 5000);
    assert_eq!(value["config"]["body"]["kind"], "cube");
    assert_eq!(value["results"]["exact_area"], 6.0);
    let out = croftonkit(&["hit-dist", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mesh_area_of_fixture_cube() {
    let body = format!("mesh:{}", fixture("cube.off").display());
    let value = json(&croftonkit(&["mesh-area", "--body", &body, "--samples", "50000"]));
    let results = &value["results"];
    assert_eq!(results["exact_area"], 6.0);
    assert_eq!(results["closed"], true);
    let z = results["z_score"].as_f64().unwrap();
    assert!(z.abs() < 4.0, "z = {z}");
    assert_eq!(value["body_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn open_mesh_warns_and_is_refused_for_chords() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("open.off");
    let cube = std::fs::read_to_string(fixture("cube.off")).unwrap();
    let open: String = cube.replace("8 12 0", "8 11 0").lines().filter(|l| *l != "3 3 4 7").map(|l| format!("{l}\n")).collect();
    std::fs::write(&path, open).unwrap();
    let body = format!("mesh:{}", path.display());
    let value = json(&croftonkit(&["mesh-area", "--body", &body, "--samples", "2000"]));
    assert!(!value["warnings"].as_array().unwrap().is_empty());
    assert_eq!(value["results"]["closed"], false);
    let out = croftonkit(&["chord-cdf", "--body", &body, "--samples", "2000"]);
    assert!(!out.status.success());
}

#[test]
fn curvature_and_kernel_scan_defaults() {
    let value = json(&croftonkit(&["curvature", "--body", "ellipsoid:1,1,1.5"]));
    let k = value["results"]["curvature_magnitudes"].as_array().unwrap();
    assert!(k.iter().all(|k| (k.as_f64().unwrap() - 1.5).abs() < 1e-9));
    let value = json(&croftonkit(&["kernel-scan", "--body", "ellipsoid:1,1,1.5", "--point", "1,0,0", "--direction", "0,0,1"]));
    let limit = value["results"]["scan"]["limit"].as_f64().unwrap();
    assert!((limit - 0.25 / 2.25f64.powi(2)).abs() < 1e-9, "{limit}");
    let value = json(&croftonkit(&["certify", "--body", "sphere", "--pairs", "2000", "--points", "200"]));
    assert_eq!(value["results"]["certificate"]["verdict"], "SphereLike");
}
