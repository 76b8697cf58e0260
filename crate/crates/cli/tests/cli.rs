use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cavity-bands")).args(args).output().expect("binary runs")
}

fn manifest(output: &Path) -> Value {
    let path = format!("{}.manifest.json", output.display());
    serde_json::from_str(&fs::read_to_string(path).expect("manifest written")).expect("manifest is json")
}

#[test]
fn bands_csv_layout_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bands.csv");
    let args = ["bands", "--V0", "0.1", "--B", "6.2832", "--grid", "4", "--N", "3", "-o", out.to_str().unwrap()];
    let first = run(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "k1,k2,E1,E2,E3,E4,E5,E6,E7,E8");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 16);
    let e1: f64 = rows[0].split(',').nth(2).unwrap().parse().unwrap();
    assert!(e1 < 0.1);
    let m = manifest(&out);
    assert_eq!(m["status"], "ok");
    assert_eq!(m["config"]["V0"], 0.1);
    assert_eq!(m["config"]["N"], 3);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert!(run(&args).status.success());
    assert_eq!(fs::read_to_string(&out).unwrap(), text);
}

#[test]
fn chern_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("chern.json");
    let o = run(&["chern", "--V0", "0.05", "--ell", "1", "--bands", "2,3", "--Ng", "8", "--N", "3", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["chern"], 2);
    assert_eq!(v["valid"], true);
    assert!(v["min_gap"].as_f64().unwrap() > 0.0);
}

#[test]
fn gap_scan_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gap.csv");
    let o = run(&[
        "gap-scan", "--V0", "0.1", "--B-min", "6", "--B-max", "7", "--steps", "2", "--grid", "4", "--N", "3", "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("B,g_numeric,g_perturbative,k1_min,k2_min\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("sym.json");
    fs::write(&cfg, r#"{"command": "symmetry", "gamma": 0.1, "ell": 1, "N": 5}"#).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "--N", "4", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["relative_commutator_s0"].as_f64().unwrap() < 1e-12);
    assert!(v["cluster_sizes"].as_array().unwrap().iter().all(|c| c.as_u64().unwrap() % 2 == 0));
    assert_eq!(manifest(&out)["config"]["N"], 4);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"command": "bands", "unknown": 1}"#).unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    let out = dir.path().join("b.csv");
    let o = run(&["bands", "--N", "1", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(manifest(&out)["status"], "config_error");
    assert_eq!(run(&["chern", "--Ng", "3"]).status.code(), Some(1));
    assert_eq!(run(&["bands", "--theta", "2"]).status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("chern.json");
    // free bands touch, so no band group is isolated
    let o = run(&["chern", "--V0", "0", "--B", "0", "--Ng", "4", "--N", "2", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let m = manifest(&out);
    assert_eq!(m["status"], "numerical_failure");
    assert!(m["reason"].as_str().unwrap().contains("gap"));
    let out = dir.path().join("dirac.json");
    let o = run(&["dirac", "--gamma", "0.05", "--B", "6.283185307179586", "--N", "3", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(manifest(&out)["status"], "numerical_failure");
}

#[test]
fn potential_file() {
    let dir = tempfile::tempdir().unwrap();
    let pot = dir.path().join("v.json");
    fs::write(&pot, r#"[{"n1": 1, "n2": 0, "re": 0.05}, {"n1": 0, "n2": 1, "re": 0.05}]"#).unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(run(&["bands", "--potential", pot.to_str().unwrap(), "--grid", "2", "--N", "3", "-o", a.to_str().unwrap()]).status.success());
    assert!(run(&["bands", "--V0", "0.1", "--grid", "2", "--N", "3", "-o", b.to_str().unwrap()]).status.success());
    assert_eq!(fs::read_to_string(a).unwrap(), fs::read_to_string(b).unwrap());
}
