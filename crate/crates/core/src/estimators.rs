//! The integral plug-in (`INT`), Monte-Carlo plug-in (`MC`), Newey–Robins
//! plug-in (`NR`) and first-order bias-corrected (`IF`) estimators under
//! every splitting scheme, plus cross-fitting.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::nuisance::{fit_density, fit_regression, DensitySettings, FittedDensity, Response, Weighting};
use crate::synthetic::{Dataset, Fold};
use crate::wavelet::{integral_of_product, DyadicResolution, PiecewiseConstantFn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    Int,
    Mc,
    Nr,
    If,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [Self::Int, Self::Mc, Self::Nr, Self::If];

    pub fn name(self) -> &'static str {
        match self {
            Self::Int => "INT",
            Self::Mc => "MC",
            Self::Nr => "NR",
            Self::If => "IF",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown estimator kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SplitScheme {
    None,
    Single,
    Double,
}

impl SplitScheme {
    pub const ALL: [SplitScheme; 3] = [Self::None, Self::Single, Self::Double];

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Single => "single",
            Self::Double => "double",
        }
    }
}

impl fmt::Display for SplitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SplitScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown splitting scheme {s:?}")))
    }
}

/// How the design density enters the nuisance fits and the integral.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityMode {
    /// `f ≡ 1`.
    Uniform,
    /// Known bounded density used as weight.
    Known(PiecewiseConstantFn),
    /// Density estimated on dedicated folds.
    Estimated(DensitySettings),
}

/// What a fold is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FoldRole {
    /// Fit of `E[A | X]`.
    TreatmentFit,
    /// Fit of `E[Y | X]` (or the single nuisance of `NR`).
    OutcomeFit,
    /// Density weighting the treatment fit.
    TreatmentDensityFit,
    /// Density weighting the outcome fit.
    OutcomeDensityFit,
    /// Density weighting the integral of `INT`.
    IntegralDensityFit,
    /// Sample mean of `AY`.
    ProductMean,
    /// Sample mean of the fitted product in `MC`.
    McEval,
    /// Sample mean of the corrected residual product in `NR` and `IF`.
    Evaluation,
}

/// Assignment of roles to `m` equally sized folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldLayout {
    slots: Vec<Vec<FoldRole>>,
}

impl FoldLayout {
    fn new(slots: Vec<Vec<FoldRole>>) -> Self {
        Self { slots }
    }

    fn singles(roles: &[FoldRole]) -> Self {
        Self::new(roles.iter().map(|&r| vec![r]).collect())
    }

    /// Fold count `m`.
    pub fn m(&self) -> usize {
        self.slots.len()
    }

    pub fn roles(&self, slot: usize) -> &[FoldRole] {
        &self.slots[slot]
    }

    /// Slot carrying `role`, if any.
    pub fn slot_of(&self, role: FoldRole) -> Option<usize> {
        self.slots.iter().position(|s| s.contains(&role))
    }
}

/// Role table for an estimator under a splitting scheme and density mode.
pub fn fold_layout(kind: EstimatorKind, scheme: SplitScheme, density: &DensityMode) -> Result<FoldLayout> {
    use EstimatorKind as K;
    use FoldRole::*;

    if let DensityMode::Estimated(_) = density {
        if scheme != SplitScheme::Double {
            return Err(Error::InvalidConfig(format!("estimated density requires double splitting (got {scheme})")));
        }
        return Ok(FoldLayout::singles(match kind {
            K::Int => {
                &[TreatmentFit, TreatmentDensityFit, OutcomeFit, OutcomeDensityFit, ProductMean, IntegralDensityFit]
            }
            K::Mc => &[TreatmentFit, TreatmentDensityFit, OutcomeFit, OutcomeDensityFit, ProductMean, McEval],
            K::Nr => &[OutcomeFit, OutcomeDensityFit, Evaluation],
            K::If => &[TreatmentFit, TreatmentDensityFit, OutcomeFit, OutcomeDensityFit, Evaluation],
        }));
    }

    Ok(match (kind, scheme) {
        (K::Int, SplitScheme::None) => FoldLayout::new(vec![vec![TreatmentFit, OutcomeFit, ProductMean]]),
        (K::Mc, SplitScheme::None) => FoldLayout::new(vec![vec![TreatmentFit, OutcomeFit, ProductMean, McEval]]),
        (K::Nr, SplitScheme::None) => FoldLayout::new(vec![vec![OutcomeFit, Evaluation]]),
        (K::If, SplitScheme::None) => FoldLayout::new(vec![vec![TreatmentFit, OutcomeFit, Evaluation]]),

        (K::Int, SplitScheme::Single) => FoldLayout::new(vec![vec![TreatmentFit, OutcomeFit], vec![ProductMean]]),
        (K::Mc, SplitScheme::Single) => {
            FoldLayout::new(vec![vec![TreatmentFit, OutcomeFit], vec![ProductMean], vec![McEval]])
        }
        (K::If, SplitScheme::Single) => FoldLayout::new(vec![vec![TreatmentFit, OutcomeFit], vec![Evaluation]]),
        // A single nuisance: single and double splitting coincide.
        (K::Nr, SplitScheme::Single | SplitScheme::Double) => FoldLayout::singles(&[OutcomeFit, Evaluation]),

        (K::Int, SplitScheme::Double) => FoldLayout::singles(&[TreatmentFit, OutcomeFit, ProductMean]),
        (K::Mc, SplitScheme::Double) => FoldLayout::singles(&[TreatmentFit, OutcomeFit, ProductMean, McEval]),
        (K::If, SplitScheme::Double) => FoldLayout::singles(&[TreatmentFit, OutcomeFit, Evaluation]),
    })
}

/// Full estimator specification.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    pub scheme: SplitScheme,
    /// Resolution of the treatment regression.
    pub k1: DyadicResolution,
    /// Resolution of the outcome regression; the only one `NR` uses.
    pub k2: DyadicResolution,
    pub cross_fit: bool,
    pub density: DensityMode,
    /// `NR` only: fit the treatment regression and average `Y (A - p̂(X))`.
    pub swap_roles: bool,
}

impl EstimatorConfig {
    pub fn new(kind: EstimatorKind, scheme: SplitScheme, k1: DyadicResolution, k2: DyadicResolution) -> Self {
        Self { kind, scheme, k1, k2, cross_fit: false, density: DensityMode::Uniform, swap_roles: false }
    }

    pub fn with_cross_fit(mut self, cross_fit: bool) -> Self {
        self.cross_fit = cross_fit;
        self
    }

    pub fn with_density(mut self, density: DensityMode) -> Self {
        self.density = density;
        self
    }

    pub fn with_swapped_roles(mut self, swap: bool) -> Self {
        self.swap_roles = swap;
        self
    }

    pub fn layout(&self) -> Result<FoldLayout> {
        fold_layout(self.kind, self.scheme, &self.density)
    }

    fn validate(&self, dim: usize) -> Result<()> {
        for r in [self.k1, self.k2] {
            if r.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: r.dim() });
            }
        }
        if self.swap_roles && self.kind != EstimatorKind::Nr {
            return Err(Error::InvalidConfig("role swapping applies to NR only".into()));
        }
        match &self.density {
            DensityMode::Known(f) if f.dim() != dim => Err(Error::DimensionMismatch { expected: dim, found: f.dim() }),
            DensityMode::Known(f) if f.min_value() <= 0.0 => {
                Err(Error::InvalidConfig("known density must be positive".into()))
            }
            DensityMode::Estimated(s) => s.validate(),
            _ => Ok(()),
        }
    }
}

/// The estimate on a dataset; dispatches to [`cross_fit`] when requested.
pub fn estimate(config: &EstimatorConfig, dataset: &Dataset) -> Result<f64> {
    if config.cross_fit {
        return cross_fit(config, dataset);
    }
    config.validate(dataset.dim())?;
    let layout = config.layout()?;
    let folds = dataset.split(layout.m())?;
    estimate_rotated(config, &layout, &folds, 0)
}

/// Average over the `m` cyclic rotations of the fold roles.
pub fn cross_fit(config: &EstimatorConfig, dataset: &Dataset) -> Result<f64> {
    if config.scheme == SplitScheme::None {
        return Err(Error::InvalidConfig("cross-fitting needs a splitting scheme".into()));
    }
    config.validate(dataset.dim())?;
    let layout = config.layout()?;
    let folds = dataset.split(layout.m())?;
    let mut total = 0.0;
    for rotation in 0..layout.m() {
        total += estimate_rotated(config, &layout, &folds, rotation)?;
    }
    Ok(total / layout.m() as f64)
}

/// The estimate with slot `s` of `layout` played by `folds[(s + rotation) % m]`.
pub fn estimate_rotated(
    config: &EstimatorConfig,
    layout: &FoldLayout,
    folds: &[Fold<'_>],
    rotation: usize,
) -> Result<f64> {
    let m = layout.m();
    if folds.len() != m {
        return Err(Error::InvalidConfig(format!("layout needs {m} folds, got {}", folds.len())));
    }
    if let Some(f) = folds.iter().find(|f| f.is_empty()) {
        return Err(Error::EmptyFold { fold: f.id() });
    }
    let fold = |role: FoldRole| -> Result<&Fold<'_>> {
        layout
            .slot_of(role)
            .map(|s| &folds[(s + rotation) % m])
            .ok_or_else(|| Error::InvalidConfig(format!("layout has no {role:?} fold")))
    };
    let density_on = |role: FoldRole| -> Result<Option<FittedDensity>> {
        match &config.density {
            DensityMode::Estimated(settings) => fit_density(fold(role)?, settings).map(Some),
            _ => Ok(None),
        }
    };
    let weighting = |fitted| weighting_for(&config.density, fitted);

    let value = match config.kind {
        EstimatorKind::Nr => {
            let density = density_on(FoldRole::OutcomeDensityFit)?;
            let (response, k) =
                if config.swap_roles { (Response::Treatment, config.k2) } else { (Response::Outcome, config.k2) };
            let fit = fit_regression(fold(FoldRole::OutcomeFit)?, response, k, weighting(&density))?;
            let eval = fold(FoldRole::Evaluation)?;
            let (weights, targets) = if config.swap_roles { (eval.y(), eval.a()) } else { (eval.a(), eval.y()) };
            mean(eval.points().zip(weights.iter().zip(targets)).map(|(x, (w, t))| w * (t - fit.eval_unchecked(x))))
        }
        kind => {
            let t_density = density_on(FoldRole::TreatmentDensityFit)?;
            let o_density = density_on(FoldRole::OutcomeDensityFit)?;
            let p_hat =
                fit_regression(fold(FoldRole::TreatmentFit)?, Response::Treatment, config.k1, weighting(&t_density))?;
            let b_hat =
                fit_regression(fold(FoldRole::OutcomeFit)?, Response::Outcome, config.k2, weighting(&o_density))?;
            match kind {
                EstimatorKind::Int => {
                    let product = fold(FoldRole::ProductMean)?;
                    let ay = mean(product.a().iter().zip(product.y()).map(|(a, y)| a * y));
                    let integral = match &config.density {
                        DensityMode::Uniform => integral_of_product(&[p_hat.function(), b_hat.function()])?,
                        DensityMode::Known(f) => integral_of_product(&[p_hat.function(), b_hat.function(), f])?,
                        DensityMode::Estimated(_) => {
                            let w = density_on(FoldRole::IntegralDensityFit)?.expect("estimated mode");
                            integral_of_product(&[p_hat.function(), b_hat.function(), w.function()])?
                        }
                    };
                    ay - integral
                }
                EstimatorKind::Mc => {
                    let product = fold(FoldRole::ProductMean)?;
                    let ay = mean(product.a().iter().zip(product.y()).map(|(a, y)| a * y));
                    let eval = fold(FoldRole::McEval)?;
                    ay - mean(eval.points().map(|x| p_hat.eval_unchecked(x) * b_hat.eval_unchecked(x)))
                }
                EstimatorKind::If => {
                    let eval = fold(FoldRole::Evaluation)?;
                    mean(
                        eval.points()
                            .zip(eval.a().iter().zip(eval.y()))
                            .map(|(x, (a, y))| (a - p_hat.eval_unchecked(x)) * (y - b_hat.eval_unchecked(x))),
                    )
                }
                EstimatorKind::Nr => unreachable!("handled above"),
            }
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite)
    }
}

fn weighting_for<'a>(mode: &'a DensityMode, fitted: &'a Option<FittedDensity>) -> Weighting<'a> {
    match (mode, fitted) {
        (DensityMode::Known(f), _) => Weighting::Known(f),
        (DensityMode::Estimated(_), Some(d)) => Weighting::Estimated(d),
        _ => Weighting::Uniform,
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count as f64
}
