//! Monte-Carlo rate experiments: replicate, reduce in replication order, fit
//! log-log slopes and compare them with the rate formulas.

use drwave_core::slope::{fit_loglog_slope, SlopeFit};
use drwave_core::tuner::{minimax_exponents, rate_exponents, regime_report};
use drwave_core::wavelet::Projectable;
use drwave_core::{
    estimate, fit_regression, minimax_resolution, prediction_optimal_k, sample, Dgp, DyadicResolution,
    PiecewiseConstantFn, Regression, Response, Weighting,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{DgpSpec, ExperimentSpec, TuningRule};
use crate::error::{LabError, Result};

/// Bias points with `|bias| < BIAS_FLOOR_STDERRS · stderr` are excluded from the bias slope.
pub const BIAS_FLOOR_STDERRS: f64 = 3.0;

/// SplitMix64 finaliser; decorrelates nearby stream indices.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream of replication `rep` at grid position `n_index`; independent of
/// the rest of the grid and of scheduling.
pub fn replication_rng(seed: u64, n_index: usize, rep: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ splitmix64(((n_index as u64) << 40) | rep as u64))
}

/// Runs `f` on a pool of `threads` workers, or the global pool when `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(t) => Ok(rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build()?.install(f)),
        None => Ok(f()),
    }
}

/// Summary of `R` draws around a known target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean: f64,
    pub bias: f64,
    /// Sample variance, divisor `R - 1`.
    pub var: f64,
    /// `mean((x - target)²)`.
    pub mse: f64,
    /// `sqrt(var / R)`.
    pub stderr: f64,
}

impl MomentSummary {
    /// Reduces in slice order so the result never depends on scheduling.
    pub fn of(values: &[f64], target: f64) -> Self {
        let r = values.len() as f64;
        let mean = values.iter().sum::<f64>() / r;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
        let mse = values.iter().map(|v| (v - target) * (v - target)).sum::<f64>() / r;
        Self { mean, bias: mean - target, var, mse, stderr: (var / r).sqrt() }
    }

    /// `mse - (bias² + var (R-1)/R)`, relative to `mse`.
    pub fn decomposition_gap(&self, replications: usize) -> f64 {
        let r = replications as f64;
        let rebuilt = self.bias * self.bias + self.var * (r - 1.0) / r;
        (self.mse - rebuilt).abs() / self.mse.abs().max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub k1: usize,
    pub k2: usize,
    #[serde(flatten)]
    pub summary: MomentSummary,
    /// `|bias|` below the noise floor; left out of the bias slope.
    pub bias_floored: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedSlope {
    pub slope: f64,
    pub stderr: f64,
    pub points: usize,
}

impl From<SlopeFit> for FittedSlope {
    fn from(f: SlopeFit) -> Self {
        Self { slope: f.slope, stderr: f.stderr, points: f.points }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slopes {
    /// Absent when fewer than two points clear the noise floor.
    pub bias: Option<FittedSlope>,
    /// Absent for single-point grids.
    pub var: Option<FittedSlope>,
    pub mse: Option<FittedSlope>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub name: String,
    pub psi: f64,
    pub replications: usize,
    pub rows: Vec<RateRow>,
    pub slopes: Slopes,
}

/// Resolutions used at per-fold size `n`.
pub fn resolutions_for(spec: &ExperimentSpec, n: usize) -> Result<(DyadicResolution, DyadicResolution)> {
    let dim = spec.dgp.dim();
    let smoothness = || {
        spec.dgp
            .smoothness()
            .ok_or_else(|| LabError::InvalidSpec("smoothness-based tuning needs a worst-case model".into()))
    };
    let exact = |k: usize| -> Result<DyadicResolution> {
        let r = DyadicResolution::from_size(k as f64, dim)?;
        if r.size() != k {
            return Err(LabError::InvalidSpec(format!("resolution {k} is not 2^(jd) for d = {dim}")));
        }
        Ok(r)
    };
    Ok(match spec.tuning {
        TuningRule::Fixed { k1, k2 } => (exact(k1)?, exact(k2)?),
        TuningRule::PredictionOptimal { constant } => {
            let (alpha, beta) = smoothness()?;
            (prediction_optimal_k(alpha, n, dim, constant)?, prediction_optimal_k(beta, n, dim, constant)?)
        }
        TuningRule::Minimax { max_side } => {
            let (alpha, beta) = smoothness()?;
            minimax_resolution(spec.estimator.kind, spec.estimator.scheme, alpha, beta, dim, n, max_side)?
        }
        TuningRule::Power { e1, e2, c1, c2 } => {
            let nf = n as f64;
            (DyadicResolution::from_size(c1 * nf.powf(e1), dim)?, DyadicResolution::from_size(c2 * nf.powf(e2), dim)?)
        }
    })
}

/// All `R` estimates at grid position `n_index`, in replication order.
pub fn replicate(spec: &ExperimentSpec, dgp: &Dgp, n_index: usize) -> Result<Vec<f64>> {
    let n = spec.n_grid[n_index];
    let (k1, k2) = resolutions_for(spec, n)?;
    let config = spec.estimator.config(k1, k2);
    let total = config.layout()?.m() * n;
    (0..spec.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(spec.seed, n_index, rep);
            let data = sample(dgp, total, &mut rng)?;
            estimate(&config, &data)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .enumerate()
        .map(|(rep, r)| r.map_err(|source| LabError::Replication { n, replication: rep, source }))
        .collect()
}

pub fn run_experiment(spec: &ExperimentSpec, threads: Option<usize>) -> Result<RateResult> {
    spec.validate()?;
    let dgp = spec.dgp.build()?;
    let psi = dgp.true_psi();
    let rows = with_threads(threads, || -> Result<Vec<RateRow>> {
        (0..spec.n_grid.len())
            .map(|i| {
                let n = spec.n_grid[i];
                let (k1, k2) = resolutions_for(spec, n)?;
                let summary = MomentSummary::of(&replicate(spec, &dgp, i)?, psi);
                let bias_floored = summary.bias.abs() < BIAS_FLOOR_STDERRS * summary.stderr;
                Ok(RateRow { n, k1: k1.size(), k2: k2.size(), summary, bias_floored })
            })
            .collect()
    })??;
    let slopes = fit_slopes(&rows)?;
    Ok(RateResult { name: spec.name.clone(), psi, replications: spec.replications, rows, slopes })
}

pub fn fit_slopes(rows: &[RateRow]) -> Result<Slopes> {
    let curve = |pts: &[(f64, f64)]| -> Result<Option<FittedSlope>> {
        if pts.len() < 2 {
            Ok(None)
        } else {
            Ok(Some(fit_loglog_slope(pts)?.into()))
        }
    };
    let points = |f: fn(&RateRow) -> f64| rows.iter().map(|r| (r.n as f64, f(r))).collect::<Vec<_>>();
    let bias_points: Vec<_> =
        rows.iter().filter(|r| !r.bias_floored).map(|r| (r.n as f64, r.summary.bias.abs())).collect();
    Ok(Slopes {
        bias: fit_loglog_slope(&bias_points).ok().map(Into::into),
        var: curve(&points(|r| r.summary.var))?,
        mse: curve(&points(|r| r.summary.mse))?,
    })
}

/// Predicted slopes (negated exponents) of `|bias|`, variance and MSE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheorySlopes {
    pub bias: f64,
    pub var: f64,
    pub mse: f64,
}

/// Rate-formula slopes for the spec's estimator and tuning rule; `None` for
/// models without smoothness or fixed resolutions.
pub fn theory_slopes(spec: &ExperimentSpec) -> Option<TheorySlopes> {
    let (alpha, beta) = spec.dgp.smoothness()?;
    let dim = spec.dgp.dim();
    let d = dim as f64;
    let (kind, scheme) = (spec.estimator.kind, spec.estimator.scheme);
    let (e1, e2) = match spec.tuning {
        TuningRule::Fixed { .. } => return None,
        TuningRule::PredictionOptimal { .. } => (d / (2.0 * alpha + d), d / (2.0 * beta + d)),
        TuningRule::Minimax { max_side } => minimax_exponents(kind, scheme, alpha, beta, dim, max_side),
        TuningRule::Power { e1, e2, .. } => (e1, e2),
    };
    let rates = rate_exponents(kind, scheme, alpha, beta, dim, e1, e2);
    Some(TheorySlopes { bias: -rates.bias, var: -rates.variance, mse: -rates.mse })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeVerdict {
    pub fitted: f64,
    pub expected: f64,
    pub gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl SlopeVerdict {
    pub fn new(fitted: f64, expected: f64, tolerance: f64) -> Self {
        let gap = (fitted - expected).abs();
        Self { fitted, expected, gap, tolerance, pass: gap <= tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    /// Best exponent of the estimator and scheme, and the minimax exponent.
    pub best_exponent: Option<f64>,
    pub minimax_exponent: Option<f64>,
    pub bias: Option<SlopeVerdict>,
    pub var: Option<SlopeVerdict>,
    pub mse: Option<SlopeVerdict>,
}

impl Verdicts {
    /// Decided by the MSE slope; bias and variance verdicts are diagnostic.
    pub fn pass(&self) -> bool {
        self.mse.is_none_or(|v| v.pass)
    }
}

/// Checks fitted slopes against the spec's target or the rate formulas.
pub fn compare_to_theory(spec: &ExperimentSpec, result: &RateResult) -> Result<Verdicts> {
    if result.rows.is_empty() {
        return Err(LabError::InvalidSpec("empty result".into()));
    }
    let tol = spec.slope_tolerance;
    let theory = theory_slopes(spec);
    let report = match spec.dgp.smoothness() {
        Some((alpha, beta)) => Some(regime_report(alpha, beta, spec.dgp.dim(), *spec.n_grid.last().unwrap())?),
        None => None,
    };
    let entry = report.as_ref().map(|r| r.entry(spec.estimator.kind, spec.estimator.scheme));
    let target = spec.target_mse_slope.or(theory.map(|t| t.mse));
    Ok(Verdicts {
        best_exponent: entry.map(|e| e.best_exponent),
        minimax_exponent: report.as_ref().map(|r| r.minimax_exponent),
        bias: theory.zip(result.slopes.bias).map(|(t, f)| SlopeVerdict::new(f.slope, t.bias, tol)),
        var: theory.zip(result.slopes.var).map(|(t, f)| SlopeVerdict::new(f.slope, t.var, tol)),
        mse: target.zip(result.slopes.mse).map(|(t, f)| SlopeVerdict::new(f.slope, t, tol)),
    })
}

/// `‖g - Π(g | V_k)‖²` for a regression function.
pub fn projection_l2_error(g: &Regression, res: DyadicResolution) -> Result<f64> {
    Ok(match g {
        Regression::Constant(_) => 0.0,
        Regression::Series(w) => {
            let details = ((1u64 << w.dim()) - 1) as f64;
            (res.level()..=w.max_level())
                .map(|l| {
                    let c = w.coefficient(l);
                    details * 2f64.powf((l as usize * w.dim()) as f64) * c * c
                })
                .sum()
        }
        Regression::Piecewise(f) => {
            let fine = f.resolution().level().max(res.level());
            let lifted = f.refine(fine)?;
            let proj = drwave_core::project(f, res)?.refine(fine)?;
            squared_distance(&lifted, &proj)?
        }
    })
}

fn squared_distance(f: &PiecewiseConstantFn, g: &PiecewiseConstantFn) -> Result<f64> {
    let fine = f.resolution().level().max(g.resolution().level());
    let (f, g) = (f.refine(fine)?, g.refine(fine)?);
    let sum: f64 = f.values().iter().zip(g.values()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / f.values().len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuisanceRow {
    pub n: usize,
    pub k: usize,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuisanceResult {
    pub rows: Vec<NuisanceRow>,
    /// Slope against `n` for the error curve, against `k` for the variance curve.
    pub slope: FittedSlope,
}

/// Integrated squared error of the treatment regression at prediction-optimal
/// resolution, over a grid of sample sizes.
pub fn nuisance_error_experiment(
    dgp_spec: &DgpSpec,
    n_grid: &[usize],
    replications: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<NuisanceResult> {
    let (alpha, _) = dgp_spec
        .smoothness()
        .ok_or_else(|| LabError::InvalidSpec("the error experiment needs a worst-case model".into()))?;
    let dgp = dgp_spec.build()?;
    let rows = with_threads(threads, || -> Result<Vec<NuisanceRow>> {
        n_grid
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let k = prediction_optimal_k(alpha, n, dgp.dim(), 1.0)?;
                let target = dgp.treatment().project(k)?;
                let tail = projection_l2_error(dgp.treatment(), k)?;
                let errors = (0..replications)
                    .into_par_iter()
                    .map(|rep| -> Result<f64> {
                        let data = sample(&dgp, n, &mut replication_rng(seed, i, rep))?;
                        let fit = fit_regression(&data.as_fold(), Response::Treatment, k, Weighting::Uniform)?;
                        // Orthogonality: the fit minus the projection lies in V_k.
                        Ok(squared_distance(fit.function(), &target)? + tail)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let s = MomentSummary::of(&errors, 0.0);
                Ok(NuisanceRow { n, k: k.size(), value: s.mean, stderr: s.stderr })
            })
            .collect()
    })??;
    let slope = fit_loglog_slope(&rows.iter().map(|r| (r.n as f64, r.value)).collect::<Vec<_>>())?.into();
    Ok(NuisanceResult { rows, slope })
}

/// `∫ Var(p̂(x)) dx` at fixed `n` across resolutions.
pub fn integrated_variance_experiment(
    dgp_spec: &DgpSpec,
    n: usize,
    levels: &[u32],
    replications: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<NuisanceResult> {
    if replications < 2 {
        return Err(LabError::InvalidSpec("need at least two replications".into()));
    }
    let dgp = dgp_spec.build()?;
    let rows = with_threads(threads, || -> Result<Vec<NuisanceRow>> {
        levels
            .iter()
            .enumerate()
            .map(|(i, &level)| {
                let k = DyadicResolution::new(level, dgp.dim())?;
                let fits = (0..replications)
                    .into_par_iter()
                    .map(|rep| -> Result<Vec<f64>> {
                        let data = sample(&dgp, n, &mut replication_rng(seed, i, rep))?;
                        let fit = fit_regression(&data.as_fold(), Response::Treatment, k, Weighting::Uniform)?;
                        Ok(fit.function().values().to_vec())
                    })
                    .collect::<Result<Vec<_>>>()?;
                let per_cell: Vec<f64> = (0..k.size())
                    .map(|c| {
                        let column: Vec<f64> = fits.iter().map(|f| f[c]).collect();
                        MomentSummary::of(&column, 0.0).var
                    })
                    .collect();
                let value = per_cell.iter().sum::<f64>() / k.size() as f64;
                // Each cell variance has relative sd ≈ sqrt(2/(R-1)); cells are nearly independent.
                let stderr = value * (2.0 / ((replications - 1) * k.size()) as f64).sqrt();
                Ok(NuisanceRow { n, k: k.size(), value, stderr })
            })
            .collect()
    })??;
    let slope = fit_loglog_slope(&rows.iter().map(|r| (r.k as f64, r.value)).collect::<Vec<_>>())?.into();
    Ok(NuisanceResult { rows, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{EstimatorSpec, SchemaVersion};
    use drwave_core::{EstimatorKind, SplitScheme};

    pub(crate) fn small_spec() -> ExperimentSpec {
        ExperimentSpec {
            version: SchemaVersion::V1,
            name: "small".into(),
            dgp: DgpSpec::Constant { treatment: 0.5, outcome: 0.5, covariance: 0.0, dim: 1, spread: 0.1 },
            estimator: EstimatorSpec {
                kind: EstimatorKind::If,
                scheme: SplitScheme::Double,
                cross_fit: false,
                density_smoothness: None,
            },
            tuning: TuningRule::Fixed { k1: 4, k2: 8 },
            n_grid: vec![64, 128, 256],
            replications: 200,
            seed: 3,
            slope_tolerance: 0.15,
            target_mse_slope: None,
        }
    }

    #[test]
    fn splitmix_reference_values() {
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_ne!(splitmix64(1), splitmix64(2));
    }

    #[test]
    fn decomposition_identity_holds() {
        let values = [0.1, 0.4, -0.2, 0.35, 0.05];
        let s = MomentSummary::of(&values, 0.02);
        assert!(s.decomposition_gap(values.len()) < 1e-12);
    }

    #[test]
    fn independent_noise_gives_no_bias() {
        let result = run_experiment(&small_spec(), Some(1)).unwrap();
        for row in &result.rows {
            assert!(row.summary.bias.abs() < 4.0 * row.summary.stderr, "{row:?}");
            assert!(row.summary.decomposition_gap(result.replications) < 1e-10);
        }
        assert_eq!(result.psi, 0.0);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let spec = small_spec();
        assert_eq!(run_experiment(&spec, Some(1)).unwrap(), run_experiment(&spec, Some(3)).unwrap());
    }

    #[test]
    fn rows_do_not_depend_on_the_rest_of_the_grid() {
        let spec = small_spec();
        let mut shorter = spec.clone();
        shorter.n_grid.truncate(2);
        let full = run_experiment(&spec, Some(2)).unwrap();
        let part = run_experiment(&shorter, Some(2)).unwrap();
        assert_eq!(&full.rows[..2], &part.rows[..]);
    }

    #[test]
    fn verdict_examples() {
        assert!(SlopeVerdict::new(-0.74, -0.75, 0.15).pass);
        let v = SlopeVerdict::new(-0.46, -0.75, 0.15);
        assert!(!v.pass);
        assert!((v.gap - 0.29).abs() < 1e-12);
    }

    #[test]
    fn empty_result_rejected() {
        let spec = small_spec();
        let empty = RateResult {
            name: "x".into(),
            psi: 0.0,
            replications: 200,
            rows: vec![],
            slopes: Slopes { bias: None, var: None, mse: None },
        };
        assert!(compare_to_theory(&spec, &empty).is_err());
    }

    #[test]
    fn series_tail_matches_cell_route() {
        let dgp = crate::config::DgpSpec::WorstCase {
            alpha: 0.4,
            beta: 0.4,
            dim: 1,
            epsilon: 0.1,
            max_level: 10,
            offset: 0.5,
            covariance: 0.05,
            spread: 0.1,
        }
        .build()
        .unwrap();
        let res = DyadicResolution::new(3, 1).unwrap();
        let Regression::Series(w) = dgp.treatment() else { unreachable!() };
        let exact = w.to_piecewise().unwrap();
        let cells = squared_distance(&exact, &dgp.treatment().project(res).unwrap()).unwrap();
        let closed = projection_l2_error(dgp.treatment(), res).unwrap();
        assert!((cells - closed).abs() < 1e-12 * closed);
    }
}
