//! Tensor-product Haar multiresolution analysis on `[0, 1]^d`.
//!
//! Cells are left-closed; a coordinate equal to `1` belongs to the last cell
//! along its axis. Cell indices pack the per-axis positions with axis 0 most
//! significant.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Regularity of the Haar basis. Smoothness parameters must stay below it.
pub const HAAR_REGULARITY: u32 = 1;

/// Largest `level * dim` accepted; keeps cell indices exact in `u64` and `f64`.
pub const MAX_TOTAL_LEVEL: u32 = 48;

/// Quadrature nodes per axis per cell for generic integrands.
pub const QUADRATURE_NODES: usize = 16;

/// A dyadic projection space `V_k` with `k = 2^(level * dim)` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicResolution {
    level: u32,
    dim: u32,
}

impl DyadicResolution {
    pub fn new(level: u32, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidResolution("dimension must be at least 1".into()));
        }
        let dim = u32::try_from(dim).map_err(|_| Error::InvalidResolution(format!("dimension {dim} too large")))?;
        if level.saturating_mul(dim) > MAX_TOTAL_LEVEL {
            return Err(Error::InvalidResolution(format!(
                "level {level} in dimension {dim} exceeds 2^{MAX_TOTAL_LEVEL} cells"
            )));
        }
        Ok(Self { level, dim })
    }

    /// Nearest dyadic space to a requested (possibly fractional) size:
    /// level `round(log2(k) / d)`, floored at zero.
    pub fn from_size(k: f64, dim: usize) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidResolution(format!("size {k} is not a positive number")));
        }
        let level = libm::round(libm::log2(k) / dim.max(1) as f64);
        let level = if level < 0.0 { 0 } else { level as u32 };
        Self::new(level, dim)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// Number of cells `k`.
    pub fn size(&self) -> usize {
        1usize << (self.level * self.dim)
    }

    pub fn regularity(&self) -> u32 {
        HAAR_REGULARITY
    }

    pub fn cells_per_axis(&self) -> usize {
        1usize << self.level
    }

    pub fn cell_volume(&self) -> f64 {
        1.0 / self.size() as f64
    }

    /// Same dimension, different level.
    pub fn with_level(&self, level: u32) -> Result<Self> {
        Self::new(level, self.dim())
    }

    /// Index of the cell containing `x`.
    pub fn cell_index(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        for &v in x {
            check_unit(v)?;
        }
        Ok(self.cell_index_unchecked(x))
    }

    /// Cell index for a point already known to lie in the unit cube.
    #[inline]
    pub(crate) fn cell_index_unchecked(&self, x: &[f64]) -> usize {
        let per_axis = self.cells_per_axis();
        let scale = per_axis as f64;
        let mut idx = 0usize;
        for &v in x {
            let c = ((v * scale) as usize).min(per_axis - 1);
            idx = (idx << self.level) | c;
        }
        idx
    }

    /// Per-axis cell positions of a packed index.
    pub fn cell_position(&self, idx: usize) -> Vec<usize> {
        let mask = self.cells_per_axis() - 1;
        let d = self.dim();
        (0..d).map(|a| (idx >> (self.level as usize * (d - 1 - a))) & mask).collect()
    }

    /// Center of a cell.
    pub fn cell_center(&self, idx: usize) -> Vec<f64> {
        let width = 1.0 / self.cells_per_axis() as f64;
        self.cell_position(idx).into_iter().map(|c| (c as f64 + 0.5) * width).collect()
    }

    /// Maps a cell index at this (finer) resolution to the enclosing cell at
    /// `coarse`.
    #[inline]
    pub(crate) fn coarsen_index(&self, idx: usize, coarse: &Self) -> usize {
        debug_assert!(coarse.level <= self.level && coarse.dim == self.dim);
        let shift = (self.level - coarse.level) as usize;
        if self.dim == 1 {
            return idx >> shift;
        }
        let fine_bits = self.level as usize;
        let coarse_bits = coarse.level as usize;
        let mask = self.cells_per_axis() - 1;
        let d = self.dim();
        let mut out = 0usize;
        for a in 0..d {
            let c = (idx >> (fine_bits * (d - 1 - a))) & mask;
            out |= (c >> shift) << (coarse_bits * (d - 1 - a));
        }
        out
    }
}

fn check_unit(v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::OutOfDomain { value: v })
    }
}

/// Projection kernel `K_{V_k}(x, y)`: `k` when `x` and `y` share a cell, else 0.
pub fn kernel_eval(res: DyadicResolution, x: &[f64], y: &[f64]) -> Result<f64> {
    let cx = res.cell_index(x)?;
    let cy = res.cell_index(y)?;
    Ok(if cx == cy { res.size() as f64 } else { 0.0 })
}

/// An element of `V_k`: one value per dyadic cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantFn {
    resolution: DyadicResolution,
    values: Vec<f64>,
}

impl PiecewiseConstantFn {
    pub fn new(resolution: DyadicResolution, values: Vec<f64>) -> Result<Self> {
        if values.len() != resolution.size() {
            return Err(Error::DimensionMismatch { expected: resolution.size(), found: values.len() });
        }
        Ok(Self { resolution, values })
    }

    pub fn constant(resolution: DyadicResolution, value: f64) -> Self {
        Self { resolution, values: vec![value; resolution.size()] }
    }

    pub fn zeros(resolution: DyadicResolution) -> Self {
        Self::constant(resolution, 0.0)
    }

    pub fn resolution(&self) -> DyadicResolution {
        self.resolution
    }

    pub fn dim(&self) -> usize {
        self.resolution.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.values[self.resolution.cell_index(x)?])
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.values[self.resolution.cell_index_unchecked(x)]
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn l2_norm_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Re-expresses the function on a finer grid; exact.
    pub fn refine(&self, level: u32) -> Result<Self> {
        if level < self.resolution.level {
            return Err(Error::InvalidResolution(format!(
                "cannot refine level {} to coarser level {level}",
                self.resolution.level
            )));
        }
        let fine = self.resolution.with_level(level)?;
        let values = (0..fine.size()).map(|i| self.values[fine.coarsen_index(i, &self.resolution)]).collect();
        Ok(Self { resolution: fine, values })
    }

    /// Orthogonal projection onto a coarser grid (cell averages); exact.
    pub fn coarsen(&self, level: u32) -> Result<Self> {
        if level > self.resolution.level {
            return Err(Error::InvalidResolution(format!(
                "cannot coarsen level {} to finer level {level}",
                self.resolution.level
            )));
        }
        let coarse = self.resolution.with_level(level)?;
        let mut values = vec![0.0; coarse.size()];
        for (i, v) in self.values.iter().enumerate() {
            values[self.resolution.coarsen_index(i, &coarse)] += v;
        }
        let ratio = (self.values.len() / coarse.size()) as f64;
        for v in &mut values {
            *v /= ratio;
        }
        Ok(Self { resolution: coarse, values })
    }

    /// Pointwise map of the cell values.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { resolution: self.resolution, values: self.values.iter().map(|&v| f(v)).collect() }
    }
}

/// `∫ f g dx`, exact; the coarser argument is refined implicitly.
pub fn inner_product(f: &PiecewiseConstantFn, g: &PiecewiseConstantFn) -> Result<f64> {
    integral_of_product(&[f, g])
}

/// `∫ Π_i f_i dx` for piecewise-constant factors at arbitrary levels; exact.
pub fn integral_of_product(factors: &[&PiecewiseConstantFn]) -> Result<f64> {
    let Some(first) = factors.first() else {
        return Ok(1.0);
    };
    let dim = first.dim();
    for f in factors {
        if f.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: f.dim() });
        }
    }
    let finest = factors.iter().map(|f| f.resolution).max_by_key(|r| r.level).expect("nonempty");
    let mut total = 0.0;
    for i in 0..finest.size() {
        let mut prod = 1.0;
        for f in factors {
            prod *= f.values[finest.coarsen_index(i, &f.resolution)];
        }
        total += prod;
    }
    Ok(total / finest.size() as f64)
}

/// Anything with an orthogonal projection onto `V_k`.
pub trait Projectable {
    fn dim(&self) -> usize;
    fn project_onto(&self, res: DyadicResolution) -> Result<PiecewiseConstantFn>;
}

/// `Π(f | V_k)`.
pub fn project<P: Projectable + ?Sized>(f: &P, res: DyadicResolution) -> Result<PiecewiseConstantFn> {
    if f.dim() != res.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: res.dim() });
    }
    f.project_onto(res)
}

impl Projectable for PiecewiseConstantFn {
    fn dim(&self) -> usize {
        self.resolution.dim()
    }

    fn project_onto(&self, res: DyadicResolution) -> Result<PiecewiseConstantFn> {
        if res.level <= self.resolution.level {
            self.coarsen(res.level)
        } else {
            self.refine(res.level)
        }
    }
}

/// A generic integrand, projected with a fixed composite midpoint rule of
/// [`QUADRATURE_NODES`] nodes per axis per cell. Approximate.
pub struct Quadrature<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64> Quadrature<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64> Projectable for Quadrature<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn project_onto(&self, res: DyadicResolution) -> Result<PiecewiseConstantFn> {
        let d = self.dim;
        let width = 1.0 / res.cells_per_axis() as f64;
        let nodes_total = QUADRATURE_NODES.pow(d as u32);
        let mut point = vec![0.0; d];
        let mut values = Vec::with_capacity(res.size());
        for idx in 0..res.size() {
            let pos = res.cell_position(idx);
            let mut acc = 0.0;
            for node in 0..nodes_total {
                let mut rest = node;
                for a in (0..d).rev() {
                    let q = rest % QUADRATURE_NODES;
                    rest /= QUADRATURE_NODES;
                    point[a] = (pos[a] as f64 + (q as f64 + 0.5) / QUADRATURE_NODES as f64) * width;
                }
                acc += (self.f)(&point);
            }
            values.push(acc / nodes_total as f64);
        }
        PiecewiseConstantFn::new(res, values)
    }
}

/// Explicit tensor Haar wavelet `Ψ^ι_{l,m}(x)`.
///
/// `orientation` is a nonzero bitmask over axes (bit `a` set selects the
/// mother wavelet on axis `a`, otherwise the scaling function); `translation`
/// holds the per-axis cell positions at `level`.
pub fn haar_detail(level: u32, translation: &[usize], orientation: u32, x: &[f64]) -> Result<f64> {
    let d = translation.len();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.len() });
    }
    if orientation == 0 || orientation >= (1 << d) {
        return Err(Error::InvalidConfig(format!("orientation {orientation} invalid in dimension {d}")));
    }
    let half_cells = 1usize << (level + 1);
    let mut value = libm::pow(2.0, level as f64 * d as f64 / 2.0);
    for a in 0..d {
        check_unit(x[a])?;
        let c = ((x[a] * half_cells as f64) as usize).min(half_cells - 1);
        if c >> 1 != translation[a] {
            return Ok(0.0);
        }
        if orientation >> a & 1 == 1 && c & 1 == 1 {
            value = -value;
        }
    }
    Ok(value)
}

/// The same detail function as an element of `V` at level `level + 1`.
pub fn haar_detail_piecewise(level: u32, translation: &[usize], orientation: u32) -> Result<PiecewiseConstantFn> {
    let res = DyadicResolution::new(level + 1, translation.len())?;
    let mut values = Vec::with_capacity(res.size());
    for idx in 0..res.size() {
        values.push(haar_detail(level, translation, orientation, &res.cell_center(idx))?);
    }
    PiecewiseConstantFn::new(res, values)
}

/// Worst-case Hölder-ball function
/// `offset + ε Σ_{l=J0}^{L} Σ_m Σ_ι 2^{-l(α + d/2)} Ψ^ι_{l,m}(x)`.
///
/// Every detail coefficient at level `l` equals `ε 2^{-l(α + d/2)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletSeriesFunction {
    smoothness: f64,
    amplitude: f64,
    max_level: u32,
    dim: usize,
    base_level: u32,
    offset: f64,
    level_weights: Vec<f64>,
}

impl WaveletSeriesFunction {
    /// Largest admissible truncation level.
    pub const MAX_LEVEL: u32 = 50;

    pub fn new(smoothness: f64, amplitude: f64, max_level: u32, dim: usize) -> Result<Self> {
        if !(smoothness > 0.0 && smoothness < HAAR_REGULARITY as f64) {
            return Err(Error::InvalidConfig(format!(
                "smoothness {smoothness} must lie in (0, {HAAR_REGULARITY}) for the Haar basis"
            )));
        }
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidConfig(format!("amplitude {amplitude} must be nonnegative")));
        }
        if dim == 0 || dim > 8 {
            return Err(Error::InvalidConfig(format!("dimension {dim} unsupported")));
        }
        if max_level > Self::MAX_LEVEL {
            return Err(Error::InvalidConfig(format!("truncation level {max_level} exceeds {}", Self::MAX_LEVEL)));
        }
        let base_level = 0;
        let level_weights = (0..=max_level).map(|l| amplitude * libm::pow(2.0, -(l as f64) * smoothness)).collect();
        Ok(Self { smoothness, amplitude, max_level, dim, base_level, offset: 0.0, level_weights })
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn base_level(&self) -> u32 {
        self.base_level
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Coefficient shared by every detail function at `level`.
    pub fn coefficient(&self, level: u32) -> f64 {
        if level < self.base_level || level > self.max_level {
            return 0.0;
        }
        self.amplitude * libm::pow(2.0, -(level as f64) * (self.smoothness + self.dim as f64 / 2.0))
    }

    /// `ε Σ_l 2^{-lα}`.
    fn level_weight_sum(&self) -> f64 {
        self.level_weights[self.base_level as usize..].iter().sum()
    }

    /// Bound on `sup |w - offset|`: `(2^d - 1) ε Σ_l 2^{-lα}`, attained at the origin.
    pub fn sup_deviation_bound(&self) -> f64 {
        ((1u32 << self.dim) - 1) as f64 * self.level_weight_sum()
    }

    /// Exact range `[min, max]` of the function.
    pub fn range(&self) -> (f64, f64) {
        (self.offset - self.level_weight_sum(), self.offset + self.sup_deviation_bound())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        for &v in x {
            check_unit(v)?;
        }
        Ok(self.eval_truncated(x, self.max_level + 1))
    }

    /// Partial sum over levels `< end`, for a point in the unit cube.
    ///
    /// On a level-`l` detail support, `Σ_ι Ψ^ι` scaled by `2^{-ld/2}` equals
    /// `Π_a (1 + s_a) - 1` with `s_a = ±1` the half-cell sign, so it is
    /// `2^d - 1` when every coordinate sits in a left half and `-1` otherwise.
    #[inline]
    pub(crate) fn eval_truncated(&self, x: &[f64], end: u32) -> f64 {
        let end = end.min(self.max_level + 1);
        if end <= self.base_level {
            return self.offset;
        }
        let top = end; // positions resolved at level `end`
        let cells = (1u64 << top) as f64;
        let all_left_value = ((1u32 << self.dim) - 1) as f64;
        let mut acc = 0.0;
        if self.dim == 1 {
            let u = ((x[0] * cells) as u64).min((1u64 << top) - 1);
            for l in self.base_level..end {
                let right = (u >> (top - 1 - l)) & 1;
                let w = self.level_weights[l as usize];
                acc += if right == 0 { w } else { -w };
            }
        } else {
            let mut positions = [0u64; 8];
            for (a, &v) in x.iter().enumerate() {
                positions[a] = ((v * cells) as u64).min((1u64 << top) - 1);
            }
            for l in self.base_level..end {
                let shift = top - 1 - l;
                let all_left = positions[..self.dim].iter().all(|p| (p >> shift) & 1 == 0);
                let w = self.level_weights[l as usize];
                acc += if all_left { all_left_value * w } else { -w };
            }
        }
        self.offset + acc
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.eval_truncated(x, self.max_level + 1)
    }

    /// The function itself as a piecewise constant at level `L + 1` (exact).
    pub fn to_piecewise(&self) -> Result<PiecewiseConstantFn> {
        self.project_onto(DyadicResolution::new(self.max_level + 1, self.dim)?)
    }

    /// `sup |w - Π(w | V_k)|` in closed form.
    pub fn projection_sup_error(&self, res: DyadicResolution) -> f64 {
        let start = res.level().max(self.base_level) as usize;
        if start > self.max_level as usize {
            return 0.0;
        }
        let tail: f64 = self.level_weights[start..].iter().sum();
        ((1u32 << self.dim) - 1) as f64 * tail
    }
}

impl Projectable for WaveletSeriesFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    /// Details at levels `>= j` integrate to zero over every level-`j` cell, so
    /// the projection is the partial sum below `j`, constant on each cell.
    fn project_onto(&self, res: DyadicResolution) -> Result<PiecewiseConstantFn> {
        let values = (0..res.size()).map(|idx| self.eval_truncated(&res.cell_center(idx), res.level())).collect();
        PiecewiseConstantFn::new(res, values)
    }
}
