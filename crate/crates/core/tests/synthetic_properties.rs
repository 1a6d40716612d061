use drwave_core::{constant_dgp, sample, worst_case_dgp, Dgp};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mean_and_stderr(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut sum, mut sq) = (0.0, 0.0, 0.0);
    for v in values {
        n += 1.0;
        sum += v;
        sq += v * v;
    }
    let mean = sum / n;
    let var = (sq - n * mean * mean) / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn models() -> Vec<Dgp> {
    vec![
        worst_case_dgp(0.25, 0.25, 1, 0.1, 12).unwrap(),
        worst_case_dgp(0.15, 0.6, 2, 0.05, 6).unwrap(),
        constant_dgp(0.5, 0.5, 0.05, 1).unwrap(),
        constant_dgp(-1.0, 1.2, -0.2, 1).unwrap(),
    ]
}

#[test]
fn responses_stay_within_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for dgp in models() {
        let (lo, hi) = dgp.bounds();
        let data = sample(&dgp, 250_000, &mut rng).unwrap();
        assert!(data.a().iter().chain(data.y()).all(|v| (lo..=hi).contains(v)));
        assert!(data.x().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn conditional_means_match_regressions() {
    let dgp = worst_case_dgp(0.25, 0.4, 1, 0.1, 12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for i in 0..20 {
        let x = [(i as f64 + 0.37) / 20.0];
        let draws: Vec<(f64, f64)> = (0..100_000).map(|_| dgp.sample_responses(&x, &mut rng)).collect();
        let (ma, sa) = mean_and_stderr(draws.iter().map(|d| d.0));
        let (my, sy) = mean_and_stderr(draws.iter().map(|d| d.1));
        let p = dgp.treatment().eval(&x).unwrap();
        let b = dgp.outcome().eval(&x).unwrap();
        assert!((ma - p).abs() < 4.0 * sa, "x={} mean A {ma} vs {p}", x[0]);
        assert!((my - b).abs() < 4.0 * sy, "x={} mean Y {my} vs {b}", x[0]);
        let (mc, sc) = mean_and_stderr(draws.iter().map(|d| (d.0 - p) * (d.1 - b)));
        assert!((mc - dgp.true_psi()).abs() < 4.0 * sc);
    }
}

#[test]
fn residual_products_average_to_the_functional() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for dgp in models() {
        let data = sample(&dgp, 1_000_000, &mut rng).unwrap();
        let products = (0..data.len()).map(|i| {
            let x = data.point(i);
            (data.a()[i] - dgp.treatment().eval(x).unwrap()) * (data.y()[i] - dgp.outcome().eval(x).unwrap())
        });
        let (m, s) = mean_and_stderr(products);
        assert!((m - dgp.true_psi()).abs() < 4.0 * s, "{m} vs {}", dgp.true_psi());
    }
}

#[test]
fn independent_noise_has_no_covariance() {
    let dgp = constant_dgp(0.3, 0.7, 0.0, 1).unwrap();
    assert_eq!(dgp.true_psi(), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let data = sample(&dgp, 200_000, &mut rng).unwrap();
    let (m, s) = mean_and_stderr(data.a().iter().zip(data.y()).map(|(a, y)| (a - 0.3) * (y - 0.7)));
    assert!(m.abs() < 4.0 * s);
}

#[test]
fn cross_moment_of_constant_model() {
    let dgp = constant_dgp(0.5, 0.5, 0.04, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let data = sample(&dgp, 400_000, &mut rng).unwrap();
    let (m, s) = mean_and_stderr(data.a().iter().zip(data.y()).map(|(a, y)| a * y));
    assert!((m - 0.29).abs() < 4.0 * s);
    assert!((dgp.constant_moments().unwrap().cross - 0.29).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn same_seed_gives_identical_data(seed in any::<u64>(), n in 1usize..500) {
        let dgp = worst_case_dgp(0.3, 0.2, 2, 0.05, 5).unwrap();
        let first = sample(&dgp, n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let second = sample(&dgp, n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn folds_have_equal_size(n in 1usize..400, m in 1usize..7) {
        let dgp = constant_dgp(0.5, 0.5, 0.05, 1).unwrap();
        let data = sample(&dgp, n, &mut ChaCha8Rng::seed_from_u64(n as u64)).unwrap();
        match data.split(m) {
            Ok(folds) => {
                prop_assert_eq!(folds.len(), m);
                prop_assert!(folds.iter().all(|f| f.len() == n / m));
            }
            Err(_) => prop_assert!(n < m),
        }
    }
}
