use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use spflow_core::io::write_dump;
use spflow_core::{Field, Grid3};

fn spflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spflow")).args(args).output().expect("binary runs")
}

fn spflow_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spflow")).args(args).env(key, value).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

const SMALL_SOLVE: &str = r#"{
  "box": { "L": 5.0, "n": 16 },
  "model": { "p": 4.5 },
  "minimax": { "seeds": [
    { "center": [-1.0, 0, 0], "radius": 0.9, "amplitude": -1.0 },
    { "center": [1.0, 0, 0], "radius": 0.9, "amplitude": 1.0 } ] },
  "output": { "dir": "out", "rng_seed": 3 }
}"#;

fn manifest_of(o: &Output) -> (PathBuf, Value) {
    let path = PathBuf::from(String::from_utf8_lossy(&o.stdout).trim());
    let m: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    (path, m)
}

#[test]
fn missing_config_names_the_path() {
    let o = spflow(&["solve", "/nonexistent/spflow/config.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent/spflow/config.json"), "{}", stderr(&o));
}

#[test]
fn exponent_out_of_range_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{ "box": { "L": 4.0, "n": 8 }, "model": { "p": 2.5 } }"#);
    let o = spflow(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("p out of (3,6)"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "typo.json", r#"{ "box": { "L": 4.0, "n": 8 }, "model": { "p": 4.5, "pp": 1 } }"#);
    assert_eq!(spflow(&["solve", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn usage_error_exits_one() {
    assert_eq!(spflow(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(spflow(&["--help"]).status.code(), Some(0));
}

#[test]
fn shipped_verify_config_passes() {
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/verify.json");
    let o = spflow(&["verify", cfg]);
    let table = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{table}");
    assert!(table.contains("exact cone distance vs QP oracle"));
    assert!(!table.contains("FAIL"));
}

#[test]
fn kernel_sign_flip_fails_verification() {
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/verify.json");
    let o = spflow_env(&["verify", cfg], "SPFLOW_INJECT_FAULT", "kernel-sign-flip");
    assert_eq!(o.status.code(), Some(3));
    let table = String::from_utf8_lossy(&o.stdout);
    let sym = table.lines().find(|l| l.starts_with("D-form symmetry")).unwrap();
    assert!(sym.ends_with("FAIL"), "{sym}");
}

#[test]
fn solve_writes_registered_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.json", SMALL_SOLVE);
    let o = spflow(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (path, m) = manifest_of(&o);
    let id = m["run_id"].as_str().unwrap();
    let out = path.parent().unwrap();
    let mut listed: Vec<String> =
        m["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap().to_string()).collect();
    listed.sort();
    let mut present: Vec<String> =
        std::fs::read_dir(out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    present.sort();
    assert_eq!(listed, present);
    assert!(listed.iter().all(|n| n.starts_with(id)));
    assert!(listed.iter().any(|n| n.ends_with("_solution.spf")));
    let trace = std::fs::read_to_string(out.join(format!("{id}_flow_trace.csv"))).unwrap();
    assert!(trace.starts_with("step,s,residual,energy,dist_Pplus,dist_Pminus\n"));
    assert_eq!(m["rng_seed"], 3);
}

#[test]
fn identical_configs_give_identical_dumps() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let dump = |dir: &Path, threads: &str| {
        let cfg = write_config(dir, "s.json", SMALL_SOLVE);
        let o = spflow_env(&["solve", cfg.to_str().unwrap()], "SPFLOW_THREADS", threads);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let (path, m) = manifest_of(&o);
        std::fs::read(path.parent().unwrap().join(format!("{}_solution.spf", m["run_id"].as_str().unwrap()))).unwrap()
    };
    assert_eq!(dump(a.path(), "1"), dump(b.path(), "2"));
}

#[test]
fn export_vtk_of_zero_field() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid3::<f64>::new(1.0, 4).unwrap();
    let mut bytes = Vec::new();
    write_dump(&Field::zeros(grid), &mut bytes).unwrap();
    let field = dir.path().join("zero.spf");
    std::fs::write(&field, &bytes).unwrap();
    let vtk = dir.path().join("zero.vtk");
    let o = spflow(&["export-vtk", field.to_str().unwrap(), vtk.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&vtk).unwrap();
    assert!(text.starts_with("# vtk DataFile Version"));
    assert!(text.contains("DIMENSIONS 4 4 4"));
    assert!(text.contains("POINT_DATA 64"));
    let tail = text.split("LOOKUP_TABLE default").nth(1).unwrap();
    let values: Vec<f64> = tail.split_whitespace().map(|t| t.parse().unwrap()).collect();
    assert_eq!(values.len(), 64);
    assert!(values.iter().all(|v| *v == 0.0));
}

#[test]
fn export_vtk_of_truncated_dump_reports_offset() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid3::<f64>::new(1.0, 4).unwrap();
    let mut bytes = Vec::new();
    write_dump(&Field::constant(grid, 1.0), &mut bytes).unwrap();
    bytes.truncate(bytes.len() - 5);
    let field = dir.path().join("cut.spf");
    std::fs::write(&field, &bytes).unwrap();
    let o = spflow(&["export-vtk", field.to_str().unwrap(), dir.path().join("cut.vtk").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("at byte"), "{}", stderr(&o));
}
