use drwave_core::oracle::{exact_nonlinearity_bias, exact_own_observation_bias, exact_projection_bias};
use drwave_core::{
    constant_dgp, estimate, fit_regression, sample, worst_case_dgp, Dataset, DensityMode, DensitySettings,
    DyadicResolution, EstimatorConfig, EstimatorKind, Response, SplitScheme, Weighting,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn res(level: u32) -> DyadicResolution {
    DyadicResolution::new(level, 1).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Rows of `data` reordered within each of `m` contiguous folds.
fn shuffle_within_folds(data: &Dataset, m: usize, rng: &mut ChaCha8Rng) -> Dataset {
    let size = data.len() / m;
    let mut order: Vec<usize> = (0..data.len()).collect();
    for fold in order[..size * m].chunks_mut(size) {
        fold.shuffle(rng);
    }
    reorder(data, &order)
}

fn reorder(data: &Dataset, order: &[usize]) -> Dataset {
    let d = data.dim();
    let x = order.iter().flat_map(|&i| data.point(i).to_vec()).collect();
    let a = order.iter().map(|&i| data.a()[i]).collect();
    let y = order.iter().map(|&i| data.y()[i]).collect();
    Dataset::new(d, x, a, y).unwrap()
}

fn concat(parts: &[&Dataset]) -> Dataset {
    let d = parts[0].dim();
    Dataset::new(
        d,
        parts.iter().flat_map(|p| p.x().to_vec()).collect(),
        parts.iter().flat_map(|p| p.a().to_vec()).collect(),
        parts.iter().flat_map(|p| p.y().to_vec()).collect(),
    )
    .unwrap()
}

fn configs() -> Vec<EstimatorConfig> {
    let mut out = Vec::new();
    for kind in EstimatorKind::ALL {
        for scheme in SplitScheme::ALL {
            out.push(EstimatorConfig::new(kind, scheme, res(3), res(5)));
        }
        out.push(
            EstimatorConfig::new(kind, SplitScheme::Double, res(2), res(3))
                .with_density(DensityMode::Estimated(DensitySettings::new(1.0))),
        );
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn row_order_within_folds_is_irrelevant(seed in any::<u64>()) {
        let dgp = worst_case_dgp(0.3, 0.2, 1, 0.1, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = sample(&dgp, 720, &mut rng).unwrap();
        for config in configs() {
            let m = config.layout().unwrap().m();
            let shuffled = shuffle_within_folds(&data, m, &mut rng);
            let (u, v) = (estimate(&config, &data).unwrap(), estimate(&config, &shuffled).unwrap());
            prop_assert!(close(u, v, 1e-12), "{:?}: {} vs {}", config.kind, u, v);
            let crossed = config.clone().with_cross_fit(config.scheme != SplitScheme::None);
            if crossed.cross_fit {
                let (u, v) = (estimate(&crossed, &data).unwrap(), estimate(&crossed, &shuffled).unwrap());
                prop_assert!(close(u, v, 1e-12));
            }
        }
    }

    #[test]
    fn cross_fitting_ignores_which_fold_comes_first(seed in any::<u64>()) {
        let dgp = worst_case_dgp(0.3, 0.2, 1, 0.1, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = sample(&dgp, 600, &mut rng).unwrap();
        let config = EstimatorConfig::new(EstimatorKind::If, SplitScheme::Double, res(4), res(3)).with_cross_fit(true);
        let size = data.len() / 3;
        let rotated: Vec<usize> = (size..3 * size).chain(0..size).collect();
        let (u, v) = (estimate(&config, &data).unwrap(), estimate(&config, &reorder(&data, &rotated)).unwrap());
        prop_assert!(close(u, v, 1e-12));
    }

    #[test]
    fn monte_carlo_on_a_cell_grid_equals_the_integral(seed in any::<u64>(), l1 in 0u32..6, l2 in 0u32..6) {
        let dgp = worst_case_dgp(0.4, 0.3, 1, 0.1, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 64;
        let fits = sample(&dgp, 3 * n, &mut rng).unwrap();
        let grid = res(6);
        let centres: Vec<f64> = (0..n).map(|i| grid.cell_center(i)[0]).collect();
        let grid_fold = Dataset::new(1, centres, vec![0.0; n], vec![0.0; n]).unwrap();
        let int = estimate(&EstimatorConfig::new(EstimatorKind::Int, SplitScheme::Double, res(l1), res(l2)), &fits).unwrap();
        let mc = estimate(
            &EstimatorConfig::new(EstimatorKind::Mc, SplitScheme::Double, res(l1), res(l2)),
            &concat(&[&fits, &grid_fold]),
        )
        .unwrap();
        prop_assert!(close(int, mc, 1e-12), "{} vs {}", int, mc);
    }

    #[test]
    fn projection_oracle_routes_agree(
        alpha in 0.05f64..0.95,
        beta in 0.05f64..0.95,
        l1 in 0u32..10,
        l2 in 0u32..10,
        kind_index in 0usize..4,
    ) {
        let dgp = worst_case_dgp(alpha, beta, 1, 0.1, 12).unwrap();
        let v = exact_projection_bias(&dgp, res(l1), res(l2), EstimatorKind::ALL[kind_index]).unwrap();
        prop_assert!(v.routes_agree(), "{:?}", v);
    }

    #[test]
    fn kernel_oracle_routes_agree(l1 in 0u32..7, l2 in 0u32..7, n in 2usize..5000, kind_index in 0usize..4) {
        let dgp = constant_dgp(0.5, -0.3, 0.05, 1).unwrap();
        let kind = EstimatorKind::ALL[kind_index];
        let nonlinear = exact_nonlinearity_bias(&dgp, res(l1), res(l2), n, kind).unwrap();
        let own = exact_own_observation_bias(&dgp, res(l1), res(l2), n, kind).unwrap();
        prop_assert!(nonlinear.exact.routes_agree());
        prop_assert!(own.exact.routes_agree());
    }
}

#[test]
fn regression_fit_is_unbiased_for_the_projection() {
    let dgp = worst_case_dgp(0.5, 0.5, 1, 0.1, 12).unwrap();
    let k = res(4);
    let target = dgp.treatment().project(k).unwrap();
    let reps = 4000;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut sum = vec![0.0; k.size()];
    let mut sq = vec![0.0; k.size()];
    for _ in 0..reps {
        let data = sample(&dgp, 256, &mut rng).unwrap();
        let fit = fit_regression(&data.as_fold(), Response::Treatment, k, Weighting::Uniform).unwrap();
        for (i, v) in fit.function().values().iter().enumerate() {
            sum[i] += v;
            sq[i] += v * v;
        }
    }
    let r = reps as f64;
    for i in 0..k.size() {
        let mean = sum[i] / r;
        let stderr = ((sq[i] / r - mean * mean) / (r - 1.0)).sqrt();
        assert!((mean - target.values()[i]).abs() < 4.0 * stderr, "cell {i}: {mean} vs {}", target.values()[i]);
    }
}

#[test]
fn unit_weights_match_the_unweighted_fit() {
    let dgp = constant_dgp(0.5, 0.5, 0.05, 1).unwrap();
    let data = sample(&dgp, 500, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let ones = drwave_core::PiecewiseConstantFn::constant(res(2), 1.0);
    let plain = EstimatorConfig::new(EstimatorKind::If, SplitScheme::Double, res(3), res(4));
    let known = plain.clone().with_density(DensityMode::Known(ones));
    assert_eq!(estimate(&plain, &data).unwrap(), estimate(&known, &data).unwrap());
}
