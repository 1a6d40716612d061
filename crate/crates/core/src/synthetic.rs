//! Data-generating processes with bounded responses and known target value.
//!
//! Responses follow `A = p(X) + σ(X) W + τ U_A` and `Y = b(X) + σ'(X) W + τ U_Y`
//! with `W` Rademacher, `U_A, U_Y ~ Uniform(-1, 1)` independent, and
//! `σ σ' = ρ m(X)` where `m` is an optional piecewise-constant modulation.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::wavelet::{project, DyadicResolution, PiecewiseConstantFn, Projectable, WaveletSeriesFunction};

/// Default response bounds `[C1, C2]`.
pub const DEFAULT_BOUNDS: (f64, f64) = (-2.0, 2.0);

/// Default noise spread `τ`.
pub const DEFAULT_SPREAD: f64 = 0.1;

/// Default shared-noise covariance for worst-case models.
pub const DEFAULT_COVARIANCE: f64 = 0.05;

/// Default additive shift for worst-case regression functions.
pub const DEFAULT_OFFSET: f64 = 0.5;

/// A conditional-mean function `x ↦ E[· | X = x]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Regression {
    Constant(f64),
    Series(WaveletSeriesFunction),
    Piecewise(PiecewiseConstantFn),
}

impl Regression {
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            Regression::Constant(c) => *c,
            Regression::Series(w) => w.eval_unchecked(x),
            Regression::Piecewise(f) => f.eval_unchecked(x),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            Regression::Constant(c) => {
                for &v in x {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::OutOfDomain { value: v });
                    }
                }
                Ok(*c)
            }
            Regression::Series(w) => w.eval(x),
            Regression::Piecewise(f) => f.eval(x),
        }
    }

    /// Exact `[min, max]`.
    pub fn range(&self) -> (f64, f64) {
        match self {
            Regression::Constant(c) => (*c, *c),
            Regression::Series(w) => w.range(),
            Regression::Piecewise(f) => (f.min_value(), f.max_value()),
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Regression::Constant(_) => None,
            Regression::Series(w) => Some(Projectable::dim(w)),
            Regression::Piecewise(f) => Some(f.dim()),
        }
    }

    /// `Π(· | V_k)`, exact for every variant.
    pub fn project(&self, res: DyadicResolution) -> Result<PiecewiseConstantFn> {
        match self {
            Regression::Constant(c) => Ok(PiecewiseConstantFn::constant(res, *c)),
            Regression::Series(w) => project(w, res),
            Regression::Piecewise(f) => project(f, res),
        }
    }

    /// Exact piecewise representation at the coarsest level that holds it.
    pub fn to_piecewise(&self, dim: usize) -> Result<PiecewiseConstantFn> {
        match self {
            Regression::Constant(c) => Ok(PiecewiseConstantFn::constant(DyadicResolution::new(0, dim)?, *c)),
            Regression::Series(w) => w.to_piecewise(),
            Regression::Piecewise(f) => Ok(f.clone()),
        }
    }
}

/// Design density of `X` on the unit cube.
#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    Uniform,
    /// Piecewise-constant density bounded away from zero.
    Piecewise(PiecewiseConstantFn),
}

impl Design {
    pub fn density(&self, dim: usize) -> Result<PiecewiseConstantFn> {
        match self {
            Design::Uniform => Ok(PiecewiseConstantFn::constant(DyadicResolution::new(0, dim)?, 1.0)),
            Design::Piecewise(f) => Ok(f.clone()),
        }
    }
}

/// Shared-noise law.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    /// Conditional covariance `ρ` of `A` and `Y` (before modulation).
    pub covariance: f64,
    /// Half-width `τ` of the independent uniform components.
    pub spread: f64,
    /// Optional nonnegative modulation `m(x)` of the covariance.
    pub modulation: Option<PiecewiseConstantFn>,
}

impl NoiseModel {
    pub fn new(covariance: f64, spread: f64) -> Self {
        Self { covariance, spread, modulation: None }
    }

    pub fn with_modulation(mut self, modulation: PiecewiseConstantFn) -> Self {
        self.modulation = Some(modulation);
        self
    }

    fn max_modulation(&self) -> f64 {
        self.modulation.as_ref().map_or(1.0, |m| m.max_value())
    }

    /// Largest shared-noise amplitude `max_x sqrt(|ρ| m(x))`.
    fn max_shared_amplitude(&self) -> f64 {
        libm::sqrt(self.covariance.abs() * self.max_modulation())
    }
}

/// A data-generating process with bounded `(A, Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dgp {
    dim: usize,
    treatment: Regression,
    outcome: Regression,
    noise: NoiseModel,
    bounds: (f64, f64),
    design: Design,
    design_cdf: Vec<f64>,
}

impl Dgp {
    pub fn new(
        dim: usize,
        treatment: Regression,
        outcome: Regression,
        noise: NoiseModel,
        bounds: (f64, f64),
        design: Design,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("dimension must be at least 1".into()));
        }
        for r in [&treatment, &outcome] {
            if let Some(found) = r.dim() {
                if found != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found });
                }
            }
        }
        if !(noise.spread >= 0.0 && noise.covariance.is_finite()) {
            return Err(Error::InvalidConfig("noise spread must be nonnegative".into()));
        }
        if let Some(m) = &noise.modulation {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: m.dim() });
            }
            if m.min_value() < 0.0 {
                return Err(Error::InvalidConfig("covariance modulation must be nonnegative".into()));
            }
        }
        let design_cdf = match &design {
            Design::Uniform => Vec::new(),
            Design::Piecewise(f) => {
                if f.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: f.dim() });
                }
                if f.min_value() <= 0.0 {
                    return Err(Error::InvalidConfig("design density must be bounded away from zero".into()));
                }
                if (f.integral() - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidConfig(format!(
                        "design density integrates to {} instead of 1",
                        f.integral()
                    )));
                }
                let total: f64 = f.values().iter().sum();
                let mut acc = 0.0;
                f.values()
                    .iter()
                    .map(|v| {
                        acc += v / total;
                        acc
                    })
                    .collect()
            }
        };
        let dgp = Self { dim, treatment, outcome, noise, bounds, design, design_cdf };
        dgp.check_budget()?;
        Ok(dgp)
    }

    /// Every draw must land in `[C1, C2]`; nothing is ever clipped.
    fn check_budget(&self) -> Result<()> {
        let (lower, upper) = self.bounds;
        if !(lower < upper) {
            return Err(Error::InvalidConfig(format!("bounds [{lower}, {upper}] are empty")));
        }
        let shared = self.noise.max_shared_amplitude();
        let noise = shared + self.noise.spread;
        for r in [&self.treatment, &self.outcome] {
            let (lo, hi) = r.range();
            let (low, high) = (lo - noise, hi + noise);
            if low < lower || high > upper {
                return Err(Error::BudgetViolated { low, high, lower, upper });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `p(x) = E[A | X = x]`.
    pub fn treatment(&self) -> &Regression {
        &self.treatment
    }

    /// `b(x) = E[Y | X = x]`.
    pub fn outcome(&self) -> &Regression {
        &self.outcome
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    /// Replaces the noise law, revalidating the budget.
    pub fn with_noise(self, noise: NoiseModel) -> Result<Self> {
        Self::new(self.dim, self.treatment, self.outcome, noise, self.bounds, self.design)
    }

    pub fn with_bounds(self, bounds: (f64, f64)) -> Result<Self> {
        Self::new(self.dim, self.treatment, self.outcome, self.noise, bounds, self.design)
    }

    pub fn with_design(self, design: Design) -> Result<Self> {
        Self::new(self.dim, self.treatment, self.outcome, self.noise, self.bounds, design)
    }

    /// `ψ = E[Cov(A, Y | X)] = ρ ∫ m f dx`.
    pub fn true_psi(&self) -> f64 {
        match &self.noise.modulation {
            None => self.noise.covariance,
            Some(m) => {
                let density = self.design.density(self.dim).expect("validated dimension");
                self.noise.covariance * crate::wavelet::inner_product(m, &density).expect("validated dimension")
            }
        }
    }

    /// Shared-noise amplitudes `(σ, σ')` at `x`.
    #[inline]
    fn shared_amplitudes(&self, x: &[f64]) -> (f64, f64) {
        let m = self.noise.modulation.as_ref().map_or(1.0, |m| m.eval_unchecked(x));
        let s = libm::sqrt(self.noise.covariance.abs() * m);
        (s, if self.noise.covariance < 0.0 { -s } else { s })
    }

    fn sample_point<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match &self.design {
            Design::Uniform => {
                for v in out.iter_mut() {
                    *v = rng.gen::<f64>();
                }
            }
            Design::Piecewise(f) => {
                let u = rng.gen::<f64>();
                let cell = self.design_cdf.partition_point(|&c| c <= u).min(self.design_cdf.len() - 1);
                let res = f.resolution();
                let width = 1.0 / res.cells_per_axis() as f64;
                for (v, pos) in out.iter_mut().zip(res.cell_position(cell)) {
                    *v = (pos as f64 + rng.gen::<f64>()) * width;
                }
            }
        }
    }

    /// Draws `(A, Y)` at a fixed design point.
    pub fn sample_responses<R: RngCore + ?Sized>(&self, x: &[f64], rng: &mut R) -> (f64, f64) {
        let (s_a, s_y) = self.shared_amplitudes(x);
        let w = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let u_a = 2.0 * rng.gen::<f64>() - 1.0;
        let u_y = 2.0 * rng.gen::<f64>() - 1.0;
        let tau = self.noise.spread;
        let a = self.treatment.eval_unchecked(x) + s_a * w + tau * u_a;
        let y = self.outcome.eval_unchecked(x) + s_y * w + tau * u_y;
        (a, y)
    }

    /// Exact moments `(E[AY], E[A²], E[Y²], E[A²Y²])` for constant regressions
    /// and unmodulated noise.
    pub fn constant_moments(&self) -> Result<ConstantMoments> {
        let (Regression::Constant(p0), Regression::Constant(b0)) = (&self.treatment, &self.outcome) else {
            return Err(Error::UnsupportedModel("constant regression functions"));
        };
        if self.noise.modulation.is_some() {
            return Err(Error::UnsupportedModel("unmodulated noise"));
        }
        let (p0, b0) = (*p0, *b0);
        let s = libm::sqrt(self.noise.covariance.abs());
        let s_y = if self.noise.covariance < 0.0 { -s } else { s };
        let uniform_second = self.noise.spread * self.noise.spread / 3.0;
        let (mut a2, mut y2, mut a2y2) = (0.0, 0.0, 0.0);
        for w in [-1.0, 1.0] {
            let ea2 = (p0 + s * w) * (p0 + s * w) + uniform_second;
            let ey2 = (b0 + s_y * w) * (b0 + s_y * w) + uniform_second;
            a2 += 0.5 * ea2;
            y2 += 0.5 * ey2;
            a2y2 += 0.5 * ea2 * ey2;
        }
        Ok(ConstantMoments {
            treatment_mean: p0,
            outcome_mean: b0,
            cross: p0 * b0 + self.noise.covariance,
            treatment_square: a2,
            outcome_square: y2,
            cross_square: a2y2,
        })
    }
}

/// Exact moments of a constant-regression model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantMoments {
    pub treatment_mean: f64,
    pub outcome_mean: f64,
    /// `E[AY]`.
    pub cross: f64,
    /// `E[A²]`.
    pub treatment_square: f64,
    /// `E[Y²]`.
    pub outcome_square: f64,
    /// `E[A²Y²]`.
    pub cross_square: f64,
}

/// Worst-case model: both regressions are [`WaveletSeriesFunction`]s shifted
/// by [`DEFAULT_OFFSET`], with default noise and bounds.
pub fn worst_case_dgp(alpha: f64, beta: f64, dim: usize, epsilon: f64, max_level: u32) -> Result<Dgp> {
    let p = WaveletSeriesFunction::new(alpha, epsilon, max_level, dim)?.with_offset(DEFAULT_OFFSET);
    let b = WaveletSeriesFunction::new(beta, epsilon, max_level, dim)?.with_offset(DEFAULT_OFFSET);
    Dgp::new(
        dim,
        Regression::Series(p),
        Regression::Series(b),
        NoiseModel::new(DEFAULT_COVARIANCE, DEFAULT_SPREAD),
        DEFAULT_BOUNDS,
        Design::Uniform,
    )
}

/// Constant regressions `p ≡ p0`, `b ≡ b0` with covariance `ρ`.
pub fn constant_dgp(p0: f64, b0: f64, rho: f64, dim: usize) -> Result<Dgp> {
    Dgp::new(
        dim,
        Regression::Constant(p0),
        Regression::Constant(b0),
        NoiseModel::new(rho, DEFAULT_SPREAD),
        DEFAULT_BOUNDS,
        Design::Uniform,
    )
}

/// i.i.d. rows `(X, A, Y)`; `x` is stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    x: Vec<f64>,
    a: Vec<f64>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize, x: Vec<f64>, a: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("dimension must be at least 1".into()));
        }
        if x.len() != a.len() * dim {
            return Err(Error::DimensionMismatch { expected: a.len() * dim, found: x.len() });
        }
        if y.len() != a.len() {
            return Err(Error::DimensionMismatch { expected: a.len(), found: y.len() });
        }
        if let Some(&v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfDomain { value: v });
        }
        Ok(Self { dim, x, a, y })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    /// Whole dataset as fold 0.
    pub fn as_fold(&self) -> Fold<'_> {
        Fold { id: 0, dim: self.dim, x: &self.x, a: &self.a, y: &self.y }
    }

    /// `m` contiguous folds of equal size `⌊N / m⌋`; trailing rows are dropped.
    pub fn split(&self, m: usize) -> Result<Vec<Fold<'_>>> {
        if m == 0 {
            return Err(Error::InvalidConfig("fold count must be positive".into()));
        }
        let size = self.len() / m;
        if size == 0 {
            return Err(Error::EmptyFold { fold: 0 });
        }
        Ok((0..m)
            .map(|id| {
                let rows = id * size..(id + 1) * size;
                Fold {
                    id,
                    dim: self.dim,
                    x: &self.x[rows.start * self.dim..rows.end * self.dim],
                    a: &self.a[rows.clone()],
                    y: &self.y[rows],
                }
            })
            .collect())
    }
}

/// A borrowed, disjoint block of rows.
#[derive(Debug, Clone, Copy)]
pub struct Fold<'a> {
    id: usize,
    dim: usize,
    x: &'a [f64],
    a: &'a [f64],
    y: &'a [f64],
}

impl<'a> Fold<'a> {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a(&self) -> &'a [f64] {
        self.a
    }

    pub fn y(&self) -> &'a [f64] {
        self.y
    }

    pub fn x(&self) -> &'a [f64] {
        self.x
    }

    #[inline]
    pub fn point(&self, i: usize) -> &'a [f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &'a [f64]> + 'a {
        self.x.chunks_exact(self.dim)
    }
}

/// Draws `n` rows; each row consumes its design coordinates, one sign and two
/// uniforms from `rng`, in that order.
pub fn sample<R: RngCore + ?Sized>(dgp: &Dgp, n: usize, rng: &mut R) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let d = dgp.dim;
    let mut x = alloc::vec![0.0; n * d];
    let mut a = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for row in x.chunks_exact_mut(d) {
        dgp.sample_point(rng, row);
        let (ai, yi) = dgp.sample_responses(row, rng);
        a.push(ai);
        y.push(yi);
    }
    Ok(Dataset { dim: d, x, a, y })
}
