//! Rate formulas: minimax exponent, best achievable exponent per estimator and
//! scheme, resolution rules, tuning flags and the density-smoothness threshold.
//!
//! Exponents are of `n` in the mean squared error (`MSE ≍ n^{-e}`). Branch
//! boundaries are inclusive on the smooth side.

use alloc::vec::Vec;

use crate::error::Result;
use crate::estimators::{EstimatorKind, SplitScheme};
use crate::wavelet::DyadicResolution;

/// Tolerance used when comparing smoothness against a regime boundary.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

fn at_least(a: f64, b: f64) -> bool {
    a >= b - BOUNDARY_TOLERANCE
}

fn below(a: f64, b: f64) -> bool {
    !at_least(a, b)
}

/// `1` when `(α + β)/2 ≥ d/4`, else `4(α + β)/(2α + 2β + d)`.
pub fn minimax_rate_exponent(alpha: f64, beta: f64, dim: usize) -> f64 {
    let s = alpha + beta;
    let d = dim as f64;
    if at_least(s / 2.0, d / 4.0) {
        1.0
    } else {
        4.0 * s / (2.0 * s + d)
    }
}

/// Best MSE exponent attainable by the estimator under the scheme.
pub fn best_exponent(kind: EstimatorKind, scheme: SplitScheme, alpha: f64, beta: f64, dim: usize) -> f64 {
    let s = alpha + beta;
    let d = dim as f64;
    let minimax = minimax_rate_exponent(alpha, beta, dim);
    let plug_in_limit = if at_least(s / 2.0, d / 2.0) { 1.0 } else { 2.0 * s / (s + d) };
    match (kind, scheme) {
        (EstimatorKind::Mc, SplitScheme::Double) => {
            if at_least(s / 2.0, d / 4.0) {
                1.0
            } else {
                3.0 * s / (s + d)
            }
        }
        (EstimatorKind::Int | EstimatorKind::If, SplitScheme::Double) => minimax,
        (EstimatorKind::Nr, SplitScheme::Single | SplitScheme::Double) => minimax,
        (EstimatorKind::If, SplitScheme::Single) => minimax,
        (EstimatorKind::Int | EstimatorKind::Mc, SplitScheme::Single) => plug_in_limit,
        (_, SplitScheme::None) => plug_in_limit,
    }
}

/// Which resolution a rule constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleSide {
    /// `k1 ∧ k2`.
    Min,
    /// `k1 ∨ k2`.
    Max,
    /// Both, with `k1 = k2`.
    Both,
    /// The single resolution of `NR`.
    Single,
}

/// Order constraint `k ≍ n^e`, `n^lo ≲ k ≲ n^hi` or `k ≲ n^e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleBound {
    Exact(f64),
    Window { lower: f64, upper: f64 },
    AtMost(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionRule {
    pub side: RuleSide,
    pub bound: RuleBound,
}

impl ResolutionRule {
    fn new(side: RuleSide, bound: RuleBound) -> Self {
        Self { side, bound }
    }
}

/// Recommended departures from prediction-optimal resolutions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TuningFlags {
    pub pred_optimal_sufficient: bool,
    pub undersmooth_k1: bool,
    pub undersmooth_k2: bool,
    pub oversmooth_k1: bool,
    pub oversmooth_k2: bool,
    /// Undersmooth one resolution, either one.
    pub undersmooth_either: bool,
    /// Oversmooth the resolution not undersmoothed.
    pub oversmooth_other: bool,
}

impl TuningFlags {
    pub const NAMES: [&'static str; 7] = [
        "predOptimalSufficient",
        "undersmoothK1",
        "undersmoothK2",
        "oversmoothK1",
        "oversmoothK2",
        "undersmoothEither",
        "oversmoothOther",
    ];

    pub fn as_array(&self) -> [bool; 7] {
        [
            self.pred_optimal_sufficient,
            self.undersmooth_k1,
            self.undersmooth_k2,
            self.oversmooth_k1,
            self.oversmooth_k2,
            self.undersmooth_either,
            self.oversmooth_other,
        ]
    }
}

/// Flags for one estimator and scheme.
pub fn tuning_flags(kind: EstimatorKind, scheme: SplitScheme, alpha: f64, beta: f64, dim: usize) -> TuningFlags {
    let half = dim as f64 / 2.0;
    let min = alpha.min(beta);
    let max = alpha.max(beta);
    let equal = (alpha - beta).abs() <= BOUNDARY_TOLERANCE;
    let beta_rougher = below(beta, alpha.min(half));
    let alpha_rougher = below(alpha, beta.min(half));
    let mut f = TuningFlags::default();
    match (kind, scheme) {
        (EstimatorKind::Int | EstimatorKind::Mc, SplitScheme::Double) => {
            f.pred_optimal_sufficient = at_least(min, half);
            f.undersmooth_k1 = below(beta, half);
            f.undersmooth_k2 = below(alpha, half);
        }
        (EstimatorKind::If, SplitScheme::Double) => {
            f.pred_optimal_sufficient = at_least(max, half);
            f.undersmooth_either = !f.pred_optimal_sufficient;
        }
        (EstimatorKind::Nr, SplitScheme::Single | SplitScheme::Double) => {
            f.pred_optimal_sufficient = at_least(alpha, half);
            f.undersmooth_k2 = !f.pred_optimal_sufficient;
        }
        (EstimatorKind::Int | EstimatorKind::Mc, SplitScheme::Single) | (EstimatorKind::Int, SplitScheme::None) => {
            f.pred_optimal_sufficient = at_least(min, half) || equal;
            f.undersmooth_k1 = beta_rougher;
            f.undersmooth_k2 = alpha_rougher;
        }
        (EstimatorKind::If, SplitScheme::Single) => {
            f.pred_optimal_sufficient = at_least(max, half);
            f.undersmooth_either = !f.pred_optimal_sufficient;
            f.oversmooth_other = !f.pred_optimal_sufficient;
        }
        (EstimatorKind::Mc, SplitScheme::None) => {
            f.pred_optimal_sufficient = at_least(min, half) || equal;
            f.undersmooth_k1 = beta_rougher;
            f.oversmooth_k2 = beta_rougher;
            f.undersmooth_k2 = alpha_rougher;
            f.oversmooth_k1 = alpha_rougher;
        }
        (EstimatorKind::If, SplitScheme::None) => {
            f.pred_optimal_sufficient = at_least(min, half) || equal;
            f.oversmooth_k1 = alpha_rougher;
            f.oversmooth_k2 = beta_rougher;
        }
        (EstimatorKind::Nr, SplitScheme::None) => {
            f.pred_optimal_sufficient = at_least(alpha, beta.min(half));
            f.undersmooth_k2 = !f.pred_optimal_sufficient;
        }
    }
    f
}

/// Order constraints on the resolutions that attain the best exponent.
pub fn resolution_rules(
    kind: EstimatorKind,
    scheme: SplitScheme,
    alpha: f64,
    beta: f64,
    dim: usize,
) -> Vec<ResolutionRule> {
    use RuleBound::*;
    use RuleSide::*;
    let s = alpha + beta;
    let d = dim as f64;
    let rough_floor = d / (2.0 * s);
    let minimax_k = 2.0 * d / (2.0 * s + d);
    let plug_in_k = d / (s + d);
    let root = at_least(s / 2.0, d / 4.0);
    let very_smooth = at_least(s / 2.0, d / 2.0);
    let window = |upper: f64| Window { lower: rough_floor, upper };
    let r = ResolutionRule::new;
    match (kind, scheme) {
        (EstimatorKind::Int, SplitScheme::Double) => {
            alloc::vec![if root { r(Min, window(1.0)) } else { r(Min, Exact(minimax_k)) }]
        }
        (EstimatorKind::Mc, SplitScheme::Double) => {
            alloc::vec![if root { r(Both, window(1.0)) } else { r(Both, Exact(3.0 * d / (2.0 * s + 2.0 * d))) }]
        }
        (EstimatorKind::If, SplitScheme::Double) => {
            alloc::vec![if root { r(Max, window(1.0)) } else { r(Max, Exact(minimax_k)) }, r(Min, AtMost(1.0)),]
        }
        (EstimatorKind::Nr, SplitScheme::Single | SplitScheme::Double) => {
            alloc::vec![if root { r(Single, window(1.0)) } else { r(Single, Exact(minimax_k)) }]
        }
        (EstimatorKind::Int, SplitScheme::Single) => {
            alloc::vec![if very_smooth { r(Min, window(0.5)) } else { r(Min, Exact(plug_in_k)) }]
        }
        (EstimatorKind::Mc, SplitScheme::Single) => {
            if very_smooth {
                alloc::vec![r(Min, window(0.5)), r(Max, AtMost(1.0))]
            } else {
                alloc::vec![r(Min, Exact(plug_in_k)), r(Max, AtMost(2.0 * d / (s + d)))]
            }
        }
        (EstimatorKind::If, SplitScheme::Single) => {
            if root {
                alloc::vec![r(Max, window(1.0)), r(Min, AtMost(0.5))]
            } else {
                alloc::vec![r(Max, Exact(minimax_k)), r(Min, AtMost(d / (2.0 * s + d)))]
            }
        }
        (kind, SplitScheme::None) => {
            let side = match kind {
                EstimatorKind::Int => Min,
                EstimatorKind::Mc => Both,
                EstimatorKind::If => Max,
                EstimatorKind::Nr => Single,
            };
            alloc::vec![if very_smooth { r(side, window(0.5)) } else { r(side, Exact(plug_in_k)) }]
        }
    }
}

/// Which argument carries `k1 ∨ k2` when a rule separates them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum MaxSide {
    #[default]
    K1,
    K2,
}

fn level_for(exponent: f64, n: usize, dim: usize) -> i64 {
    libm::round(exponent * libm::log2(n as f64) / dim as f64) as i64
}

fn rule_level(bound: RuleBound, n: usize, dim: usize) -> u32 {
    let level = match bound {
        RuleBound::Exact(e) => level_for(e, n, dim),
        RuleBound::Window { lower, upper } => (level_for(lower, n, dim) + level_for(upper, n, dim)).div_euclid(2),
        RuleBound::AtMost(e) => level_for(e, n, dim).div_euclid(2),
    };
    level.max(0) as u32
}

/// A concrete dyadic pair `(k1, k2)` obeying [`resolution_rules`].
///
/// Free constants are 1 and windows resolve to their geometric midpoint
/// level. An unconstrained `k1 ∨ k2` equals `k1 ∧ k2`.
pub fn minimax_resolution(
    kind: EstimatorKind,
    scheme: SplitScheme,
    alpha: f64,
    beta: f64,
    dim: usize,
    n: usize,
    max_side: MaxSide,
) -> Result<(DyadicResolution, DyadicResolution)> {
    let rules = resolution_rules(kind, scheme, alpha, beta, dim);
    let mut min_level = None;
    let mut max_level = None;
    let mut max_cap = None;
    for rule in &rules {
        let level = rule_level(rule.bound, n, dim);
        match (rule.side, rule.bound) {
            (RuleSide::Both | RuleSide::Single, _) => {
                let r = DyadicResolution::new(level, dim)?;
                return Ok((r, r));
            }
            (RuleSide::Max, RuleBound::AtMost(e)) => max_cap = Some(level_for(e, n, dim).max(0) as u32),
            (RuleSide::Max, _) => max_level = Some(level),
            (RuleSide::Min, _) => min_level = Some(level),
        }
    }
    let (lo, hi) = match (min_level, max_level) {
        (Some(lo), Some(hi)) => (lo.min(hi), hi),
        (Some(lo), None) => {
            let hi = max_cap.map_or(lo, |cap| lo.min(cap).max(lo));
            (lo, hi)
        }
        (None, Some(hi)) => (hi, hi),
        (None, None) => unreachable!("every rule set constrains a resolution"),
    };
    let small = DyadicResolution::new(lo, dim)?;
    let large = DyadicResolution::new(hi, dim)?;
    Ok(match max_side {
        MaxSide::K1 => (large, small),
        MaxSide::K2 => (small, large),
    })
}

/// The exponents `(e1, e2)` with `k_i ≍ n^{e_i}` that [`minimax_resolution`]
/// follows, before rounding to dyadic levels.
pub fn minimax_exponents(
    kind: EstimatorKind,
    scheme: SplitScheme,
    alpha: f64,
    beta: f64,
    dim: usize,
    max_side: MaxSide,
) -> (f64, f64) {
    let exponent = |bound: RuleBound| match bound {
        RuleBound::Exact(e) => e,
        RuleBound::Window { lower, upper } => (lower + upper) / 2.0,
        RuleBound::AtMost(e) => e / 2.0,
    };
    let (mut low, mut high) = (None, None);
    for rule in resolution_rules(kind, scheme, alpha, beta, dim) {
        match (rule.side, rule.bound) {
            (RuleSide::Both | RuleSide::Single, bound) => {
                let e = exponent(bound);
                return (e, e);
            }
            (RuleSide::Max, RuleBound::AtMost(_)) => {}
            (RuleSide::Max, bound) => high = Some(exponent(bound)),
            (RuleSide::Min, bound) => low = Some(exponent(bound)),
        }
    }
    let (lo, hi) = match (low, high) {
        (Some(lo), Some(hi)) => (lo.min(hi), hi),
        (Some(lo), None) => (lo, lo),
        (None, Some(hi)) => (hi, hi),
        (None, None) => unreachable!("every rule set constrains a resolution"),
    };
    match max_side {
        MaxSide::K1 => (hi, lo),
        MaxSide::K2 => (lo, hi),
    }
}

/// Predicted decay rates (`n^{-rate}`) of bias, variance and MSE when
/// `k1 = n^{e1}` and `k2 = n^{e2}`; `NR` uses `e2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateExponents {
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
}

pub fn rate_exponents(
    kind: EstimatorKind,
    scheme: SplitScheme,
    alpha: f64,
    beta: f64,
    dim: usize,
    e1: f64,
    e2: f64,
) -> RateExponents {
    let r = (alpha + beta) / dim as f64;
    let (lo, hi) = (e1.min(e2), e1.max(e2));
    let min_of = |xs: &[f64]| xs.iter().copied().fold(f64::INFINITY, f64::min);
    let cross = [1.0, 2.0 - 2.0 * lo, 2.0 - hi, 3.0 - lo - hi, 4.0 - 2.0 * lo - hi];
    let (bias, variance) = match (kind, scheme) {
        (EstimatorKind::Int, SplitScheme::Double) => (lo * r, min_of(&[1.0, 2.0 - lo])),
        (EstimatorKind::Mc, SplitScheme::Double) => (lo * r, min_of(&[1.0, 2.0 - hi, 3.0 - lo - hi])),
        (EstimatorKind::If, SplitScheme::Double) => (hi * r, min_of(&[1.0, 2.0 - hi, 3.0 - lo - hi])),
        (EstimatorKind::Nr, SplitScheme::Single | SplitScheme::Double) => (e2 * r, min_of(&[1.0, 2.0 - e2])),
        (EstimatorKind::Int, SplitScheme::Single | SplitScheme::None) => {
            (min_of(&[lo * r, 1.0 - lo]), min_of(&[1.0, 2.0 - 2.0 * lo]))
        }
        (EstimatorKind::Mc, SplitScheme::Single) => (min_of(&[lo * r, 1.0 - lo]), min_of(&cross)),
        (EstimatorKind::If, SplitScheme::Single) => (min_of(&[hi * r, 1.0 - lo]), min_of(&cross)),
        (EstimatorKind::Mc, SplitScheme::None) => {
            (min_of(&[lo * r, 1.0 - hi]), min_of(&cross).min(5.0 - 2.0 * lo - 2.0 * hi))
        }
        (EstimatorKind::If, SplitScheme::None) => {
            (min_of(&[hi * r, 1.0 - hi]), min_of(&cross).min(3.0 - 2.0 * hi).min(5.0 - 2.0 * lo - 2.0 * hi))
        }
        (EstimatorKind::Nr, SplitScheme::None) => {
            (min_of(&[e2 * r, 1.0 - e2]), min_of(&[1.0, 2.0 - e2, 3.0 - 2.0 * e2]))
        }
    };
    RateExponents { bias, variance, mse: (2.0 * bias).min(variance) }
}

/// Regime facts for one estimator and scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeEntry {
    pub kind: EstimatorKind,
    pub scheme: SplitScheme,
    pub achievable: bool,
    pub best_exponent: f64,
    pub rules: Vec<ResolutionRule>,
    pub flags: TuningFlags,
    /// Concrete pair from [`minimax_resolution`] with `k1 ∨ k2` on `k1`.
    pub resolutions: (DyadicResolution, DyadicResolution),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub alpha: f64,
    pub beta: f64,
    pub dim: usize,
    pub n: usize,
    pub minimax_exponent: f64,
    pub entries: Vec<RegimeEntry>,
}

impl RegimeReport {
    pub fn entry(&self, kind: EstimatorKind, scheme: SplitScheme) -> &RegimeEntry {
        self.entries.iter().find(|e| e.kind == kind && e.scheme == scheme).expect("every kind and scheme is present")
    }
}

/// All twelve estimator/scheme entries at `(α, β, d)`, with concrete
/// resolutions for sample size `n`.
pub fn regime_report(alpha: f64, beta: f64, dim: usize, n: usize) -> Result<RegimeReport> {
    let minimax = minimax_rate_exponent(alpha, beta, dim);
    let mut entries = Vec::with_capacity(12);
    for kind in EstimatorKind::ALL {
        for scheme in SplitScheme::ALL {
            let best = best_exponent(kind, scheme, alpha, beta, dim);
            entries.push(RegimeEntry {
                kind,
                scheme,
                achievable: (best - minimax).abs() <= BOUNDARY_TOLERANCE,
                best_exponent: best,
                rules: resolution_rules(kind, scheme, alpha, beta, dim),
                flags: tuning_flags(kind, scheme, alpha, beta, dim),
                resolutions: minimax_resolution(kind, scheme, alpha, beta, dim, n, MaxSide::K1)?,
            });
        }
    }
    Ok(RegimeReport { alpha, beta, dim, n, minimax_exponent: minimax, entries })
}

/// Density smoothness threshold: estimated-density configurations need
/// `γ > g*(α, β)`, with `δ = (α+β)/2` and `Δ = |α/β - 1|`.
pub fn gstar(alpha: f64, beta: f64, dim: usize) -> f64 {
    let d = dim as f64;
    let delta = (alpha + beta) / 2.0;
    let spread = (alpha / beta - 1.0).abs();
    let ratio = 4.0 * delta / d;
    let numerator = 2.0 * delta * (spread + 1.0) * (1.0 - ratio);
    let denominator = (spread + 2.0) * (1.0 + ratio) - 4.0 * (delta / d) * (1.0 - ratio) * (spread + 1.0);
    numerator / denominator
}
