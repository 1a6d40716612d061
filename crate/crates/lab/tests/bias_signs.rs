//! Signs of the sample-reuse biases, fixed once by a high-replication
//! simulation and stored with their provenance. The regular tests check the
//! closed-form oracles against the stored values.

use std::path::PathBuf;

use drwave::config::{DgpSpec, EstimatorSpec, ExperimentSpec, SchemaVersion, TuningRule};
use drwave::rate_lab::run_experiment;
use drwave_core::oracle::{exact_nonlinearity_bias, exact_own_observation_bias};
use drwave_core::{constant_dgp, DyadicResolution, EstimatorKind, SplitScheme};
use serde::{Deserialize, Serialize};

const REPLICATIONS: usize = 1_000_000;
const N: usize = 64;
const K: usize = 8;
const SEED: u64 = 0x5151;
/// Allowed distance between stored mean and exact oracle, in stored stderrs.
const AGREEMENT_STDERRS: f64 = 4.0;

#[derive(Debug, Serialize, Deserialize)]
struct Provenance {
    script: String,
    model: String,
    n: usize,
    k1: usize,
    k2: usize,
    seed: u64,
    replications: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct SignEntry {
    kind: String,
    scheme: String,
    mean_bias: f64,
    stderr: f64,
    /// `-1`, `0` or `1`; zero when the mean is within three stderrs of zero.
    sign: i8,
}

#[derive(Debug, Serialize, Deserialize)]
struct SignFixture {
    provenance: Provenance,
    entries: Vec<SignEntry>,
}

fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/bias_signs.json")
}

fn cases() -> Vec<(EstimatorKind, SplitScheme)> {
    use EstimatorKind::*;
    let single = [Int, Mc, Nr, If].map(|k| (k, SplitScheme::Single));
    let none = [Int, Mc, Nr, If].map(|k| (k, SplitScheme::None));
    single.into_iter().chain(none).collect()
}

fn dgp_spec() -> DgpSpec {
    DgpSpec::Constant { treatment: 0.5, outcome: 0.5, covariance: 0.05, dim: 1, spread: 0.1 }
}

fn exact(kind: EstimatorKind, scheme: SplitScheme) -> f64 {
    let dgp = constant_dgp(0.5, 0.5, 0.05, 1).unwrap();
    let k = DyadicResolution::new(K.trailing_zeros(), 1).unwrap();
    let oracle = match scheme {
        SplitScheme::Single => exact_nonlinearity_bias(&dgp, k, k, N, kind),
        SplitScheme::None => exact_own_observation_bias(&dgp, k, k, N, kind),
        SplitScheme::Double => unreachable!(),
    };
    oracle.unwrap().exact.value()
}

fn sign_of(mean: f64, stderr: f64) -> i8 {
    if mean.abs() < 3.0 * stderr {
        0
    } else if mean > 0.0 {
        1
    } else {
        -1
    }
}

#[test]
fn oracle_signs_match_the_simulated_fixture() {
    let text = std::fs::read_to_string(fixture_path()).expect("fixture present; regenerate with --ignored");
    let fixture: SignFixture = serde_json::from_str(&text).unwrap();
    assert_eq!(fixture.provenance.replications, REPLICATIONS);
    assert_eq!(fixture.entries.len(), cases().len());
    for ((kind, scheme), entry) in cases().into_iter().zip(&fixture.entries) {
        assert_eq!((kind.to_string(), scheme.to_string()), (entry.kind.clone(), entry.scheme.clone()));
        let value = exact(kind, scheme);
        let oracle_sign = if value.abs() < 1e-15 { 0 } else { value.signum() as i8 };
        assert_eq!(oracle_sign, entry.sign, "{kind} {scheme}: oracle {value}, simulated {}", entry.mean_bias);
        assert!(
            (entry.mean_bias - value).abs() <= AGREEMENT_STDERRS * entry.stderr,
            "{kind} {scheme}: oracle {value}, simulated {} ± {}",
            entry.mean_bias,
            entry.stderr
        );
    }
}

#[test]
#[ignore = "one-time generation: about 1e9 simulated rows"]
fn generate_sign_fixture() {
    let mut entries = Vec::new();
    for (kind, scheme) in cases() {
        let spec = ExperimentSpec {
            version: SchemaVersion::V1,
            name: format!("sign-{kind}-{scheme}"),
            dgp: dgp_spec(),
            estimator: EstimatorSpec { kind, scheme, cross_fit: false, density_smoothness: None },
            tuning: TuningRule::Fixed { k1: K, k2: K },
            n_grid: vec![N],
            replications: REPLICATIONS,
            seed: SEED,
            slope_tolerance: 0.15,
            target_mse_slope: None,
        };
        let row = run_experiment(&spec, None).unwrap().rows.remove(0);
        let s = row.summary;
        entries.push(SignEntry {
            kind: kind.to_string(),
            scheme: scheme.to_string(),
            mean_bias: s.bias,
            stderr: s.stderr,
            sign: sign_of(s.bias, s.stderr),
        });
    }
    let fixture = SignFixture {
        provenance: Provenance {
            script: "cargo test --release -p drwave --test bias_signs -- --ignored generate_sign_fixture".into(),
            model: "constant regressions p = b = 0.5, noise covariance 0.05, spread 0.1, uniform design, d = 1".into(),
            n: N,
            k1: K,
            k2: K,
            seed: SEED,
            replications: REPLICATIONS,
        },
        entries,
    };
    std::fs::create_dir_all(fixture_path().parent().unwrap()).unwrap();
    std::fs::write(fixture_path(), serde_json::to_string_pretty(&fixture).unwrap() + "\n").unwrap();
}
