use std::path::Path;
use std::process::{Command, Output};

fn thermodmn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermodmn"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn usage_errors_exit_with_code_3_and_help_with_0() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(thermodmn(dir.path(), &["frobnicate"]).status.code(), Some(3));
    assert_eq!(thermodmn(dir.path(), &["evaluate"]).status.code(), Some(3));
    assert_eq!(thermodmn(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn missing_and_malformed_inputs_exit_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = thermodmn(dir.path(), &["evaluate", "--program", "absent.json"]);
    assert_eq!(out.status.code(), Some(3));
    std::fs::write(dir.path().join("bad.json"), "{\"load\": {\"kind\": \"spiral\"}}").unwrap();
    assert_eq!(thermodmn(dir.path(), &["evaluate", "--program", "bad.json"]).status.code(), Some(3));
}

#[test]
fn invalid_program_values_exit_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("p.json"),
        r#"{"load": {"kind": "uniaxial", "component": 9, "strain": 0.01, "rate": 1e-3, "steps": 4}}"#,
    )
    .unwrap();
    assert_eq!(thermodmn(dir.path(), &["evaluate", "--program", "p.json"]).status.code(), Some(1));
}

#[test]
fn evaluate_writes_a_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("p.json"),
        r#"{"load": {"kind": "uniaxial", "component": 0, "strain": 0.01, "rate": 1e-3, "steps": 5}}"#,
    )
    .unwrap();
    let out = thermodmn(dir.path(), &["evaluate", "--depth", "2", "--program", "p.json", "--out", "t.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);
}

#[test]
fn sample_is_reproducible_from_its_seed() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let out = thermodmn(dir.path(), &["sample", "--count", "8", "--bins", "4", "--seed", "3", "--out", name]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.json")).unwrap());
    assert!(dir.path().join("contrast_histogram.csv").exists());
}
