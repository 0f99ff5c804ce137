use std::path::PathBuf;
use std::process::Command;

use ncbundle::cli::Report;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ncbundle-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(dir: &PathBuf, config: &str, extra: &[&str]) -> (i32, Option<Report>) {
    let cfg = dir.join("config.json");
    let out = dir.join("report.json");
    std::fs::write(&cfg, config).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_ncbundle"))
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .status()
        .unwrap();
    let report = std::fs::read_to_string(&out).ok().map(|t| serde_json::from_str(&t).unwrap());
    (status.code().unwrap(), report)
}

const PAIR: &str = r#"{"version": 1, "seed": 3, "scenarios": [
    {"name": "pair", "kind": "custom", "dirac": [[[0,0],[1,0]],[[1,0],[0,0]]], "parity_mask": [false, true]},
    {"name": "su2", "kind": "su2_group", "twice_j": 1, "tolerances": {"kostant_square_formula": 1.0}}
]}"#;

#[test]
fn passing_config_writes_report_and_spectra() {
    let dir = scratch("pass");
    let spectra = dir.join("spectra");
    let (code, report) = run(&dir, PAIR, &["--emit-spectra", spectra.to_str().unwrap()]);
    assert_eq!(code, 0);
    let report = report.unwrap();
    assert_eq!(report.schema_version, 1);
    assert_eq!(report.provenance.seed, 3);
    assert_eq!(report.provenance.config_sha256.len(), 64);
    assert_eq!(report.scenarios.len(), 2);
    assert!(report.scenarios.iter().all(|s| s.error.is_none() && s.checks.iter().all(|c| c.passed)));
    let csv = std::fs::read_to_string(spectra.join("pair.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("eigenvalue,multiplicity,block_label"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("-1"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn failing_check_exits_one() {
    let dir = scratch("fail");
    let cfg = r#"{"version": 1, "scenarios": [{"name": "su2", "kind": "su2_group", "twice_j": 2}]}"#;
    let (code, report) = run(&dir, cfg, &[]);
    assert_eq!(code, 1);
    let failed: Vec<String> =
        report.unwrap().scenarios[0].checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    assert_eq!(failed, ["kostant_square_formula"]);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn build_error_exits_two() {
    let dir = scratch("build");
    let cfg = r#"{"version": 1, "scenarios": [{"name": "bad", "kind": "custom", "dirac": [[[1,0]]], "parity_mask": [false, true]}]}"#;
    let (code, report) = run(&dir, cfg, &[]);
    assert_eq!(code, 2);
    assert!(report.unwrap().scenarios[0].error.is_some());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn malformed_config_exits_two() {
    let dir = scratch("parse");
    let (code, _) = run(&dir, r#"{"version": 1, "scenarios": [{"kind": "sphere"}]}"#, &[]);
    assert_eq!(code, 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn global_tolerance_override_applies() {
    let dir = scratch("tol");
    let cfg = r#"{"version": 1, "scenarios": [{"name": "su2", "kind": "su2_group", "twice_j": 2}]}"#;
    let (code, report) = run(&dir, cfg, &["--tol", "1.0", "--seed", "9"]);
    assert_eq!(code, 0);
    let report = report.unwrap();
    assert_eq!(report.provenance.seed, 9);
    assert!(report.scenarios[0].checks.iter().all(|c| c.tolerance == 1.0));
    std::fs::remove_dir_all(&dir).unwrap();
}
