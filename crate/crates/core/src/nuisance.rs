//! Fold-local Haar projection estimators of the regression functions and of
//! the design density.

use alloc::format;
use alloc::vec;

use crate::error::{Error, Result};
use crate::synthetic::Fold;
use crate::wavelet::{DyadicResolution, PiecewiseConstantFn};

/// Which response column a regression is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Response {
    Treatment,
    Outcome,
}

/// Per-observation weight `w(X_i)` dividing each response.
#[derive(Debug, Clone, Copy)]
pub enum Weighting<'a> {
    Uniform,
    Known(&'a PiecewiseConstantFn),
    Estimated(&'a FittedDensity),
}

/// `x ↦ (1/n) Σ_i R_i K_k(X_i, x) / w(X_i)`, stored as cell values.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedRegressor {
    function: PiecewiseConstantFn,
    source_fold: usize,
}

impl FittedRegressor {
    pub fn function(&self) -> &PiecewiseConstantFn {
        &self.function
    }

    pub fn resolution(&self) -> DyadicResolution {
        self.function.resolution()
    }

    pub fn source_fold(&self) -> usize {
        self.source_fold
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.function.eval(x)
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.function.eval_unchecked(x)
    }
}

/// Bucket-sum projection regression on one fold.
pub fn fit_regression(
    fold: &Fold<'_>,
    response: Response,
    res: DyadicResolution,
    weighting: Weighting<'_>,
) -> Result<FittedRegressor> {
    if fold.is_empty() {
        return Err(Error::EmptyFold { fold: fold.id() });
    }
    if fold.dim() != res.dim() {
        return Err(Error::DimensionMismatch { expected: res.dim(), found: fold.dim() });
    }
    let weights = match weighting {
        Weighting::Uniform => None,
        Weighting::Known(f) => Some(f),
        Weighting::Estimated(density) => {
            if density.source_fold == fold.id() {
                return Err(Error::OverlappingFolds { fold: fold.id() });
            }
            Some(density.function())
        }
    };
    if let Some(w) = weights {
        if w.dim() != res.dim() {
            return Err(Error::DimensionMismatch { expected: res.dim(), found: w.dim() });
        }
    }
    let values = match response {
        Response::Treatment => fold.a(),
        Response::Outcome => fold.y(),
    };
    let mut sums = vec![0.0; res.size()];
    for (x, &r) in fold.points().zip(values) {
        let cell = res.cell_index_unchecked(x);
        sums[cell] += match weights {
            None => r,
            Some(w) => r / w.eval_unchecked(x),
        };
    }
    let scale = res.size() as f64 / fold.len() as f64;
    for s in &mut sums {
        *s *= scale;
    }
    Ok(FittedRegressor { function: PiecewiseConstantFn::new(res, sums)?, source_fold: fold.id() })
}

/// Nearest dyadic space to `c n^{d / (2α + d)}`.
pub fn prediction_optimal_k(alpha: f64, n: usize, dim: usize, c: f64) -> Result<DyadicResolution> {
    if !(alpha > 0.0) || n < 2 || !(c > 0.0) || dim == 0 {
        return Err(Error::InvalidConfig(format!(
            "prediction-optimal resolution needs α > 0, n ≥ 2, c > 0 (got α={alpha}, n={n}, c={c})"
        )));
    }
    let d = dim as f64;
    DyadicResolution::from_size(c * libm::pow(n as f64, d / (2.0 * alpha + d)), dim)
}

/// Nearest dyadic space to `c (n / ln n)^{d / (2γ + d)}`.
pub fn density_resolution(n: usize, gamma: f64, dim: usize, c: f64) -> Result<DyadicResolution> {
    if !(gamma > 0.0) || n < 2 || !(c > 0.0) || dim == 0 {
        return Err(Error::InvalidConfig(format!(
            "density resolution needs γ > 0, n ≥ 2, c > 0 (got γ={gamma}, n={n}, c={c})"
        )));
    }
    let d = dim as f64;
    let nf = n as f64;
    DyadicResolution::from_size(c * libm::pow(nf / libm::log(nf), d / (2.0 * gamma + d)), dim)
}

/// Projection density estimate clamped into `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedDensity {
    raw: PiecewiseConstantFn,
    clamped: PiecewiseConstantFn,
    bounds: (f64, f64),
    source_fold: usize,
}

impl FittedDensity {
    /// The clamped estimate used as a weight.
    pub fn function(&self) -> &PiecewiseConstantFn {
        &self.clamped
    }

    /// Cell values before clamping; they integrate to exactly one.
    pub fn raw(&self) -> &PiecewiseConstantFn {
        &self.raw
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn source_fold(&self) -> usize {
        self.source_fold
    }
}

/// Settings of the bounded density estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensitySettings {
    /// Smoothness `γ` of the design density.
    pub smoothness: f64,
    /// Clamp range `[M1, M2]`, with `0 < M1 ≤ M2`.
    pub bounds: (f64, f64),
    /// Constant in the resolution rule.
    pub constant: f64,
}

impl DensitySettings {
    pub fn new(smoothness: f64) -> Self {
        Self { smoothness, bounds: (0.1, 10.0), constant: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bounds;
        if !(self.smoothness > 0.0) || !(lo > 0.0 && lo <= hi) || !(self.constant > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "density settings need γ > 0, 0 < M1 ≤ M2, c > 0 (got γ={}, [{lo}, {hi}], c={})",
                self.smoothness, self.constant
            )));
        }
        Ok(())
    }
}

/// Histogram-type projection estimate at `density_resolution`, then clamped.
pub fn fit_density(fold: &Fold<'_>, settings: &DensitySettings) -> Result<FittedDensity> {
    settings.validate()?;
    if fold.is_empty() {
        return Err(Error::EmptyFold { fold: fold.id() });
    }
    let res = density_resolution(fold.len().max(2), settings.smoothness, fold.dim(), settings.constant)?;
    let mut counts = vec![0.0; res.size()];
    for x in fold.points() {
        counts[res.cell_index_unchecked(x)] += 1.0;
    }
    let scale = res.size() as f64 / fold.len() as f64;
    for c in &mut counts {
        *c *= scale;
    }
    let raw = PiecewiseConstantFn::new(res, counts)?;
    let (lo, hi) = settings.bounds;
    let clamped = raw.map(|v| v.clamp(lo, hi));
    Ok(FittedDensity { raw, clamped, bounds: settings.bounds, source_fold: fold.id() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::Dataset;
    use alloc::vec::Vec;

    fn fold_of(x: Vec<f64>, a: Vec<f64>) -> Dataset {
        let y = a.clone();
        Dataset::new(1, x, a, y).unwrap()
    }

    #[test]
    fn single_point_fit() {
        let data = fold_of(vec![0.3], vec![1.0]);
        let fit = fit_regression(
            &data.as_fold(),
            Response::Treatment,
            DyadicResolution::new(1, 1).unwrap(),
            Weighting::Uniform,
        )
        .unwrap();
        assert_eq!(fit.function().values(), &[2.0, 0.0]);
    }

    #[test]
    fn two_point_fit() {
        let data = fold_of(vec![0.3, 0.7], vec![1.0, 3.0]);
        let fit = fit_regression(
            &data.as_fold(),
            Response::Treatment,
            DyadicResolution::new(1, 1).unwrap(),
            Weighting::Uniform,
        )
        .unwrap();
        assert_eq!(fit.function().values(), &[1.0, 3.0]);
    }

    #[test]
    fn known_weight_divides_responses() {
        let data = fold_of(vec![0.3, 0.7], vec![1.0, 3.0]);
        let res = DyadicResolution::new(1, 1).unwrap();
        let w = PiecewiseConstantFn::new(res, vec![0.5, 1.5]).unwrap();
        let fit = fit_regression(&data.as_fold(), Response::Outcome, res, Weighting::Known(&w)).unwrap();
        assert_eq!(fit.function().values(), &[2.0, 2.0]);
    }

    #[test]
    fn density_on_same_fold_rejected() {
        let data = fold_of(vec![0.1, 0.2, 0.6, 0.9], vec![1.0; 4]);
        let fold = data.as_fold();
        let density = fit_density(&fold, &DensitySettings::new(1.0)).unwrap();
        let res = DyadicResolution::new(1, 1).unwrap();
        assert_eq!(
            fit_regression(&fold, Response::Treatment, res, Weighting::Estimated(&density)),
            Err(Error::OverlappingFolds { fold: 0 })
        );
    }

    #[test]
    fn density_mass_and_clamp() {
        let data = fold_of(vec![0.01, 0.02, 0.03, 0.04, 0.05, 0.9, 0.95, 0.97], vec![0.0; 8]);
        let settings = DensitySettings { smoothness: 0.2, bounds: (0.5, 1.5), constant: 4.0 };
        let density = fit_density(&data.as_fold(), &settings).unwrap();
        assert!((density.raw().integral() - 1.0).abs() < 1e-12);
        assert!(density.function().values().iter().all(|&v| (0.5..=1.5).contains(&v)));
        assert!(density.raw().max_value() > 1.5);
    }

    #[test]
    fn prediction_optimal_examples() {
        assert_eq!(prediction_optimal_k(0.5, 4096, 1, 1.0).unwrap().size(), 64);
        assert_eq!(prediction_optimal_k(0.15, 8192, 1, 1.0).unwrap().size(), 1024);
        assert_eq!(prediction_optimal_k(0.5, 4096, 1, 2.0).unwrap().size(), 128);
        assert!(prediction_optimal_k(0.5, 1, 1, 1.0).is_err());
    }

    #[test]
    fn empty_fold_rejected() {
        let data = Dataset::new(1, vec![], vec![], vec![]).unwrap();
        let res = DyadicResolution::new(1, 1).unwrap();
        assert!(matches!(
            fit_regression(&data.as_fold(), Response::Treatment, res, Weighting::Uniform),
            Err(Error::EmptyFold { .. })
        ));
    }
}
