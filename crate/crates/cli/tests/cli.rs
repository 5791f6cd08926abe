use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn unispread(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unispread"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn report(dir: &Path, args: &[&str]) -> Value {
    let out = unispread(dir, args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["schema_version"], 1);
    json["report"].clone()
}

#[test]
fn dist_of_identical_files_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.txt"), "dim 2\n# corner\n0 0\n1.5 0.5 3\n").unwrap();
    let r = report(dir.path(), &["dist", "a.txt", "a.txt", "--window", "0,2"]);
    assert_eq!(r["value"], 0.0);
    assert_eq!(r["error_bound"], 0.0);
}

#[test]
fn dist_against_grid_json() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.txt"), "dim 1\n0\n1\n2\n3\n").unwrap();
    let grid = r#"{"dim":1,"origin":[-0.5],"h":1,"L":4,"quantum":{"num":1,"den":1},"cells":[1,1,1,1]}"#;
    fs::write(dir.path().join("g.json"), grid).unwrap();
    let r = report(dir.path(), &["dist", "a.txt", "g.json", "--window", "0,4", "--s", "2"]);
    assert_eq!(r["value"], 0.25);
    assert_eq!(r["error_bound"], 0.25);
}

#[test]
fn shift_sweep_of_lattice_on_integer_shifts() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(
        dir.path(),
        &[
            "shift-sweep",
            "--kind",
            "lattice",
            "--dim",
            "2",
            "--window",
            "0,4",
            "--shift-grid",
            "integer",
        ],
    );
    assert_eq!(r["empirical_c3"], 0.0);
    assert_eq!(r["shifts"].as_array().unwrap().len(), 9);
}

#[test]
fn growth_detects_density_defect_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = unispread(
        dir.path(),
        &[
            "growth",
            "--kind",
            "density-defect",
            "--window",
            "0,8",
            "--sides",
            "8,16,32",
            "--out",
            "g.json",
        ],
    );
    assert!(out.status.success());
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.starts_with("growth: value="), "{summary}");
    let json: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("g.json")).unwrap()).unwrap();
    assert_eq!(json["report"]["classification"], "growth-detected");
    let csv = fs::read_to_string(dir.path().join("g.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("L,value,error_bound\n8,"));
}

#[test]
fn gen_writes_a_readable_point_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = unispread(
        dir.path(),
        &["gen", "--kind", "lattice", "--window", "0,4", "--out", "p.txt"],
    );
    assert!(out.status.success());
    assert_eq!(
        fs::read_to_string(dir.path().join("p.txt")).unwrap(),
        "dim 1\n0\n1\n2\n3\n"
    );
    let r = report(dir.path(), &["lattice-dist", "p.txt", "--window", "0,4"]);
    assert_eq!(r["value"], 0.0);
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.json"),
        r#"{"command":"bijection","spec":{"kind":"lattice","window":{"lower":[0],"side":8}},"z":[1]}"#,
    )
    .unwrap();
    let r = report(dir.path(), &["bijection", "--z", "0.5", "--config", "run.json"]);
    assert_eq!(r["c7"], 0.0);
    assert_eq!(r["pairing"][0], serde_json::json!([0, 1]));

    let out = unispread(dir.path(), &["cesaro", "--config", "run.json"]);
    assert_eq!(out.status.code(), Some(1));
    fs::write(dir.path().join("bad.json"), "{\"sides\": [8],\n \"windw\": \"0,8\"}").unwrap();
    let out = unispread(dir.path(), &["growth", "--config", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("windw") && err.contains("line 2"), "{err}");
}

#[test]
fn malformed_point_file_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.txt"), "dim 1\n0.5\n\nfoo\n").unwrap();
    let out = unispread(dir.path(), &["lattice-dist", "a.txt", "--window", "0,2"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("a.txt: line 4"), "{err}");
}

#[test]
fn mass_mismatch_reports_both_totals() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.txt"), "dim 1\n0.5\n1.5 2\n").unwrap();
    fs::write(dir.path().join("b.txt"), "dim 1\n0.5\n").unwrap();
    let out = unispread(dir.path(), &["dist", "a.txt", "b.txt", "--window", "0,2"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("source 3") && err.contains("target 1"), "{err}");
}

#[test]
fn count_mismatch_is_a_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = unispread(
        dir.path(),
        &["lattice-dist", "--kind", "density_defect", "--window", "0,8"],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("12") && err.contains("8"), "{err}");
}

#[test]
fn bad_flags_exit_with_validation_status() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(unispread(dir.path(), &["dist", "--bogus"]).status.code(), Some(1));
    assert_eq!(
        unispread(dir.path(), &["lattice-dist", "--kind", "lattice"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(unispread(dir.path(), &["--help"]).status.code(), Some(0));
}
