use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use drwave::config::ExperimentSpec;

fn drwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drwave")).args(args).output().expect("binary runs")
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

const SMALL: &str = r#"{
  "version": "v1",
  "name": "small",
  "dgp": {"model": "constant", "treatment": 0.5, "outcome": 0.5, "covariance": 0.05, "dim": 1},
  "estimator": {"kind": "IF", "scheme": "double"},
  "tuning": {"rule": "fixed", "k1": 8, "k2": 8},
  "n_grid": [64, 128],
  "replications": 150,
  "seed": 11
}"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn missing_config_exits_with_usage_code() {
    let out = drwave(&["run", "--config", "does/not/exist.json", "--out", "unused"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config not found"));
}

#[test]
fn malformed_config_exits_with_usage_code_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &SMALL.replace("\"seed\": 11", "\"seed\": 11, \"sede\": 3"));
    let out_dir = dir.path().join("out");
    let out = drwave(&["run", "--config", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sede"));
    assert!(!out_dir.exists());
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(drwave(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn regime_map_three_by_three() {
    let out = drwave(&[
        "regime-map",
        "--alpha-grid",
        "0.1:0.9:3",
        "--beta-grid",
        "0.1,0.5,0.9",
        "--d",
        "1",
        "--kind",
        "IF",
        "--scheme",
        "double",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 10);
    let header: Vec<&str> = lines[0].split(',').collect();
    assert_eq!(&header[..7], ["alpha", "beta", "kind", "scheme", "achievable", "bestExponent", "minimaxExponent"]);
    assert!(header.contains(&"undersmoothEither"));
    assert!(lines[1..].iter().all(|l| l.split(',').count() == header.len()));
}

#[test]
fn regime_map_rejects_bad_grids() {
    let out = drwave(&["regime-map", "--alpha-grid", "0.1:0.9", "--beta-grid", "0.5", "--d", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let mut files = Vec::new();
    for (i, threads) in ["1", "3"].into_iter().enumerate() {
        let out_dir = dir.path().join(format!("run{i}"));
        let out = drwave(&[
            "--threads",
            threads,
            "run",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        files.push((
            std::fs::read(out_dir.join("small.csv")).unwrap(),
            std::fs::read(out_dir.join("small.json")).unwrap(),
        ));
    }
    assert_eq!(files[0], files[1]);
    assert!(String::from_utf8_lossy(&files[0].0).starts_with("n,mean,bias,var,mse,stderr\n64,"));
}

#[test]
fn oracle_and_kernel_checks_pass() {
    let out = drwave(&["oracle-check"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
    assert!(drwave(&["kernel-check", "--k1", "4", "--k2", "16"]).status.success());
    assert_eq!(drwave(&["kernel-check", "--k1", "6", "--k2", "16"]).status.code(), Some(2));
}

#[test]
fn shipped_configs_are_valid_and_round_trip() {
    let mut count = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let spec = ExperimentSpec::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(Some(spec.name.as_str()), path.file_stem().and_then(|s| s.to_str()));
        assert_eq!(ExperimentSpec::from_json(&spec.to_json()).unwrap(), spec);
        count += 1;
    }
    assert!(count >= 10);
}
