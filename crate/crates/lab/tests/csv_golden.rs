//! The rate CSV of a small fixed experiment, byte for byte.

use std::path::PathBuf;

use drwave::config::ExperimentSpec;
use drwave::io::rate_csv;
use drwave::rate_lab::run_experiment;

const SPEC: &str = r#"{
  "version": "v1",
  "name": "golden",
  "dgp": {"model": "worst_case", "alpha": 0.3, "beta": 0.4, "dim": 1, "epsilon": 0.1, "max_level": 10},
  "estimator": {"kind": "MC", "scheme": "single"},
  "tuning": {"rule": "prediction_optimal"},
  "n_grid": [64, 128, 256],
  "replications": 120,
  "seed": 42
}"#;

fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden_rates.csv")
}

fn produce() -> String {
    let spec = ExperimentSpec::from_json(SPEC).unwrap();
    rate_csv(&run_experiment(&spec, Some(2)).unwrap())
}

#[test]
fn csv_matches_the_golden_file() {
    let golden = std::fs::read_to_string(fixture_path()).expect("fixture present; regenerate with --ignored");
    assert!(golden.starts_with("n,mean,bias,var,mse,stderr\n"));
    assert_eq!(produce(), golden);
}

#[test]
#[ignore = "rewrites the golden fixture"]
fn generate_golden_csv() {
    std::fs::write(fixture_path(), produce()).unwrap();
}
