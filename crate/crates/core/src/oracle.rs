//! Exact ground truth for the estimators' expected deviation from `ψ`.
//!
//! Each value is produced twice: by a closed-form sum and by exact sums over
//! dyadic cells. The two must agree to [`ROUTE_TOLERANCE`] (relative).
//! Signs follow `E[ψ̂] - ψ`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::synthetic::{ConstantMoments, Design, Dgp, Regression};
use crate::wavelet::{integral_of_product, DyadicResolution, PiecewiseConstantFn, WaveletSeriesFunction};

/// Relative agreement required between the two routes.
pub const ROUTE_TOLERANCE: f64 = 1e-12;

/// Largest grid the cell route will enumerate.
pub const MAX_CELL_ROUTE_CELLS: usize = 1 << 24;

/// Largest fine grid for the brute-force kernel sums.
pub const MAX_KERNEL_ENUMERATION_CELLS: usize = 4096;

/// One oracle value computed by two independent routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    pub closed_form: f64,
    pub cell_sum: f64,
}

impl OracleValue {
    pub fn value(&self) -> f64 {
        self.closed_form
    }

    /// `|a - b| / max(|a|, |b|)`, zero when both vanish.
    pub fn relative_gap(&self) -> f64 {
        let scale = self.closed_form.abs().max(self.cell_sum.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.closed_form - self.cell_sum).abs() / scale
        }
    }

    pub fn routes_agree(&self) -> bool {
        self.relative_gap() <= ROUTE_TOLERANCE || (self.closed_form - self.cell_sum).abs() <= 1e-300
    }
}

/// Expected deviation with its leading-order term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasOracle {
    /// The leading term alone (what rate statements track).
    pub leading: f64,
    /// The exact expected deviation.
    pub exact: OracleValue,
}

fn series_pair(dgp: &Dgp) -> Result<(&WaveletSeriesFunction, &WaveletSeriesFunction)> {
    match (dgp.treatment(), dgp.outcome()) {
        (Regression::Series(p), Regression::Series(b)) => Ok((p, b)),
        _ => Err(Error::UnsupportedModel("wavelet-series regression functions")),
    }
}

fn require_uniform(dgp: &Dgp) -> Result<()> {
    match dgp.design() {
        Design::Uniform => Ok(()),
        Design::Piecewise(_) => Err(Error::UnsupportedModel("a uniform design")),
    }
}

/// Level at which the residual products start: `k1 ∧ k2` for `INT`/`MC`,
/// `k1 ∨ k2` for `IF`, `k2` for `NR`.
fn residual_level(kind: EstimatorKind, k1: DyadicResolution, k2: DyadicResolution) -> u32 {
    match kind {
        EstimatorKind::Int | EstimatorKind::Mc => k1.level().min(k2.level()),
        EstimatorKind::If => k1.level().max(k2.level()),
        EstimatorKind::Nr => k2.level(),
    }
}

/// Projection bias of a split estimator on a worst-case model:
/// `ε_p ε_b Σ_{l ≥ j*} (2^d - 1) 2^{ld} 2^{-l(α + β + d)}`.
///
/// The cell route multiplies the two projection residuals cell by cell on
/// the level-`L+1` grid, where the series is exactly piecewise constant.
pub fn exact_projection_bias(
    dgp: &Dgp,
    k1: DyadicResolution,
    k2: DyadicResolution,
    kind: EstimatorKind,
) -> Result<OracleValue> {
    require_uniform(dgp)?;
    let (p, b) = series_pair(dgp)?;
    let d = dgp.dim();
    if k1.dim() != d || k2.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: k1.dim().max(k2.dim()) });
    }
    let start = residual_level(kind, k1, k2);
    let top = p.max_level().min(b.max_level());
    let details_per_cell = ((1u64 << d) - 1) as f64;
    let mut closed_form = 0.0;
    for l in start..=top {
        let count = details_per_cell * libm::pow(2.0, (l as usize * d) as f64);
        closed_form += count * p.coefficient(l) * b.coefficient(l);
    }

    let fine_level = p.max_level().max(b.max_level()) + 1;
    let fine = DyadicResolution::new(fine_level, d)?;
    if fine.size() > MAX_CELL_ROUTE_CELLS {
        return Err(Error::UnsupportedModel("a truncation level small enough for the cell route"));
    }
    // Every bias below is invariant to constant shifts; dropping them keeps
    // the cell sums free of cancellation.
    let pf = p.clone().with_offset(0.0).to_piecewise()?.refine(fine_level)?;
    let bf = b.clone().with_offset(0.0).to_piecewise()?.refine(fine_level)?;
    let proj = |f: &PiecewiseConstantFn, r: DyadicResolution| -> Result<PiecewiseConstantFn> {
        if r.level() >= fine_level {
            Ok(f.clone())
        } else {
            f.coarsen(r.level())
        }
    };
    // Orthogonality turns each bias into an integral of two residuals:
    // `∫PB - ∫Π1P Π2B = ∫(P - ΠminP)(B - ΠminB)` and `∫P(B - Π2B) = ∫(P - Π2P)(B - Π2B)`.
    let (p_level, b_level) = match kind {
        EstimatorKind::Int | EstimatorKind::Mc => {
            let low = if k1.level() <= k2.level() { k1 } else { k2 };
            (low, low)
        }
        EstimatorKind::If => (k1, k2),
        EstimatorKind::Nr => (k2, k2),
    };
    let rp = residual(&pf, &proj(&pf, p_level)?)?;
    let rb = residual(&bf, &proj(&bf, b_level)?)?;
    let cell_sum = integral_of_product(&[&rp, &rb])?;
    Ok(OracleValue { closed_form, cell_sum })
}

fn residual(f: &PiecewiseConstantFn, coarse: &PiecewiseConstantFn) -> Result<PiecewiseConstantFn> {
    let lifted = coarse.refine(f.resolution().level())?;
    let values = f.values().iter().zip(lifted.values()).map(|(a, b)| a - b).collect();
    PiecewiseConstantFn::new(f.resolution(), values)
}

fn constant_moments(dgp: &Dgp) -> Result<ConstantMoments> {
    require_uniform(dgp)?;
    dgp.constant_moments()
}

fn check_sample(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::EmptySample)
    } else {
        Ok(())
    }
}

/// Kernel constants of uniform-design Haar kernels, counted cell by cell.
#[derive(Debug, Clone, Copy, PartialEq)]
struct KernelConstants {
    /// `∫ K_{k1}(x, x) dx`.
    trace1: f64,
    /// `∫ K_{k2}(x, x) dx`.
    trace2: f64,
    /// `∫ E[K_{k1}(X, x) K_{k2}(X, x)] dx`.
    overlap: f64,
    /// `∫ E[K_{k1}(X, x)] E[K_{k2}(X', x)] dx`.
    separate: f64,
}

fn enumerated_constants(k1: DyadicResolution, k2: DyadicResolution) -> Result<KernelConstants> {
    let fine = if k1.level() >= k2.level() { k1 } else { k2 };
    let cells = fine.size();
    if cells > MAX_KERNEL_ENUMERATION_CELLS {
        return Err(Error::UnsupportedModel("resolutions small enough for kernel enumeration"));
    }
    let kern = |r: &DyadicResolution, u: usize, v: usize| -> f64 {
        if fine.coarsen_index(u, r) == fine.coarsen_index(v, r) {
            r.size() as f64
        } else {
            0.0
        }
    };
    let w = 1.0 / cells as f64;
    let (mut trace1, mut trace2, mut overlap, mut separate) = (0.0, 0.0, 0.0, 0.0);
    for x in 0..cells {
        trace1 += w * kern(&k1, x, x);
        trace2 += w * kern(&k2, x, x);
        let (mut both, mut first, mut second) = (0.0, 0.0, 0.0);
        for u in 0..cells {
            let (a, b) = (kern(&k1, u, x), kern(&k2, u, x));
            both += w * a * b;
            first += w * a;
            second += w * b;
        }
        overlap += w * both;
        separate += w * first * second;
    }
    Ok(KernelConstants { trace1, trace2, overlap, separate })
}

fn closed_constants(k1: DyadicResolution, k2: DyadicResolution) -> KernelConstants {
    KernelConstants {
        trace1: k1.size() as f64,
        trace2: k2.size() as f64,
        overlap: k1.size().min(k2.size()) as f64,
        separate: 1.0,
    }
}

/// Single-split nonlinearity bias on a constant model with uniform design.
///
/// Fitting both regressions on the same `n` rows adds the diagonal
/// `(1/n) E[AY K1(X,x) K2(X,x)]` to `E[p̂ b̂]`, giving
/// `∓ (c (k1 ∧ k2) - p0 b0) / n` with `c = E[AY]`: negative for `INT`/`MC`,
/// positive for `IF`, zero for `NR`.
pub fn exact_nonlinearity_bias(
    dgp: &Dgp,
    k1: DyadicResolution,
    k2: DyadicResolution,
    n: usize,
    kind: EstimatorKind,
) -> Result<BiasOracle> {
    let m = constant_moments(dgp)?;
    check_sample(n)?;
    let nf = n as f64;
    let pb = m.treatment_mean * m.outcome_mean;
    let value = |k: &KernelConstants| -> f64 {
        let plug_in = m.cross * k.overlap / nf + (nf - 1.0) / nf * pb * k.separate;
        match kind {
            EstimatorKind::Int | EstimatorKind::Mc => pb - plug_in,
            EstimatorKind::If => plug_in - pb,
            EstimatorKind::Nr => 0.0,
        }
    };
    let closed = closed_constants(k1, k2);
    let counted = enumerated_constants(k1, k2)?;
    let leading = m.cross * closed.overlap / nf;
    let leading = match kind {
        EstimatorKind::Int | EstimatorKind::Mc => -leading,
        EstimatorKind::If => leading,
        EstimatorKind::Nr => 0.0,
    };
    Ok(BiasOracle { leading, exact: OracleValue { closed_form: value(&closed), cell_sum: value(&counted) } })
}

/// No-split own-observation bias on a constant model with uniform design.
///
/// Evaluating a fit at its own training rows picks up `K(X_i, X_i) = k`.
/// `NR` gets `-(c k2 - p0 b0)/n`; `INT` keeps its nonlinearity term. `MC`
/// picks up the diagonals of `p̂ b̂`, `-((k1 + k2) p0 b0 + c kmin)/n`, and
/// `IF` nets them against its two cross diagonals, leaving
/// `(-(c - p0 b0)(k1 + k2) + c kmin)/n`; both add `± c k1 k2 / n²`.
pub fn exact_own_observation_bias(
    dgp: &Dgp,
    k1: DyadicResolution,
    k2: DyadicResolution,
    n: usize,
    kind: EstimatorKind,
) -> Result<BiasOracle> {
    let m = constant_moments(dgp)?;
    check_sample(n)?;
    let nf = n as f64;
    let pb = m.treatment_mean * m.outcome_mean;
    let c = m.cross;
    let value = |k: &KernelConstants| -> f64 {
        // E[A_i b̂(X_i)] and E[Y_i p̂(X_i)] over the training rows.
        let cross_b = c * k.trace2 / nf + (nf - 1.0) / nf * pb;
        let cross_p = c * k.trace1 / nf + (nf - 1.0) / nf * pb;
        // E[p̂(X_i) b̂(X_i)] over the training rows, split by which of the two
        // kernel sums' rows coincide with row i or with each other.
        let product = (c * k.trace1 * k.trace2
            + (nf - 1.0) * ((k.trace1 + k.trace2) * pb + c * k.overlap)
            + (nf - 1.0) * (nf - 2.0) * pb * k.separate)
            / (nf * nf);
        match kind {
            EstimatorKind::Int => pb - (c * k.overlap / nf + (nf - 1.0) / nf * pb * k.separate),
            EstimatorKind::Nr => pb - cross_b,
            EstimatorKind::Mc => pb - product,
            EstimatorKind::If => pb - cross_b - cross_p + product,
        }
    };
    let closed = closed_constants(k1, k2);
    let counted = enumerated_constants(k1, k2)?;
    let (t1, t2, kmin) = (closed.trace1, closed.trace2, closed.overlap);
    let leading = match kind {
        EstimatorKind::Int => -c * kmin / nf,
        EstimatorKind::Nr => -c * t2 / nf,
        EstimatorKind::Mc => -((t1 + t2) * pb + c * kmin) / nf - c * t1 * t2 / (nf * nf),
        EstimatorKind::If => (-(c - pb) * (t1 + t2) + c * kmin) / nf + c * t1 * t2 / (nf * nf),
    };
    Ok(BiasOracle { leading, exact: OracleValue { closed_form: value(&closed), cell_sum: value(&counted) } })
}

/// One kernel-moment integral over three dyadic scalings of `(k1, k2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMomentRow {
    pub name: &'static str,
    /// Claimed order: `"1"`, `"kmin"` or `"kmin^2"`.
    pub order: &'static str,
    /// `(k1, k2)` at each scaling.
    pub sizes: Vec<(usize, usize)>,
    pub values: Vec<OracleValue>,
    /// `value / order` at each scaling.
    pub ratios: Vec<f64>,
    /// Both routes agree and the ratios stay within a factor of two.
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMomentReport {
    pub rows: Vec<KernelMomentRow>,
}

impl KernelMomentReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Uniform-design moment integrals of products of Haar kernels, each computed
/// by brute-force enumeration of fine-cell triples `(X, x, y)` and in closed
/// form, at `(k1, k2)`, `(2k1, 2k2)` and `(4k1, 4k2)` (per-axis doubling).
pub fn kernel_moment_check(k1: DyadicResolution, k2: DyadicResolution) -> Result<KernelMomentReport> {
    if k1.dim() != k2.dim() {
        return Err(Error::DimensionMismatch { expected: k1.dim(), found: k2.dim() });
    }
    let top = k1.level().max(k2.level()) + 2;
    let largest = DyadicResolution::new(top, k1.dim())?.size();
    if largest > 256 {
        return Err(Error::InvalidConfig(format!(
            "kernel enumeration limited to 256 fine cells, scaling reaches {largest}"
        )));
    }
    let names: [(&str, &str); 8] = [
        ("E|K1(X,x)K2(X,y)|", "1"),
        ("E|K1(X,x)K1(X,y)| E|K2(X,x)K2(X,y)|", "kmin"),
        ("(E|K1(X,x)K2(X,y)|)^2", "kmin"),
        ("E|K1(X,x)K2(X,x)K1(X,y)|", "kmin"),
        ("E|K1(X,x)K2(X,x)K2(X,y)|", "kmin"),
        ("E[K1(X,x)K2(X,x)K1(X,y)K2(X,y)]", "kmin^2"),
        ("K(x,x)", "k1"),
        ("E[K1(X,x)K2(X,x)] dx", "kmin"),
    ];
    let mut rows: Vec<KernelMomentRow> = names
        .iter()
        .map(|&(name, order)| KernelMomentRow {
            name,
            order,
            sizes: Vec::new(),
            values: Vec::new(),
            ratios: Vec::new(),
            pass: true,
        })
        .collect();
    for step in 0..3 {
        let a = k1.with_level(k1.level() + step)?;
        let b = k2.with_level(k2.level() + step)?;
        let kmin = a.size().min(b.size()) as f64;
        let closed = [1.0, kmin, kmin, kmin, kmin, kmin * kmin, a.size() as f64, kmin];
        let counted = enumerate_moments(a, b);
        for (i, row) in rows.iter_mut().enumerate() {
            let v = OracleValue { closed_form: closed[i], cell_sum: counted[i] };
            let order = match row.order {
                "1" => 1.0,
                "kmin" => kmin,
                "kmin^2" => kmin * kmin,
                _ => a.size() as f64,
            };
            row.sizes.push((a.size(), b.size()));
            row.ratios.push(v.cell_sum / order);
            row.pass &= v.routes_agree();
            row.values.push(v);
        }
    }
    for row in &mut rows {
        let hi = row.ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = row.ratios.iter().copied().fold(f64::INFINITY, f64::min);
        row.pass &= lo > 0.0 && hi / lo <= 2.0;
    }
    Ok(KernelMomentReport { rows })
}

/// Brute-force sums over fine cells; every kernel is constant on them.
fn enumerate_moments(k1: DyadicResolution, k2: DyadicResolution) -> [f64; 8] {
    let fine = if k1.level() >= k2.level() { k1 } else { k2 };
    let cells = fine.size();
    let w = 1.0 / cells as f64;
    let c1: Vec<usize> = (0..cells).map(|i| fine.coarsen_index(i, &k1)).collect();
    let c2: Vec<usize> = (0..cells).map(|i| fine.coarsen_index(i, &k2)).collect();
    let (s1, s2) = (k1.size() as f64, k2.size() as f64);
    let kern1 = |u: usize, v: usize| if c1[u] == c1[v] { s1 } else { 0.0 };
    let kern2 = |u: usize, v: usize| if c2[u] == c2[v] { s2 } else { 0.0 };
    let mut out = [0.0; 8];
    let mut e11 = vec![0.0; cells];
    let mut e22 = vec![0.0; cells];
    for x in 0..cells {
        for y in 0..cells {
            let (mut m12, mut m11, mut m22, mut m121, mut m122, mut m1212) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
            for u in 0..cells {
                let (a, b) = (kern1(u, x), kern2(u, x));
                let (c, e) = (kern1(u, y), kern2(u, y));
                m12 += w * a * e;
                m11 += w * a * c;
                m22 += w * b * e;
                m121 += w * a * b * c;
                m122 += w * a * b * e;
                m1212 += w * a * b * c * e;
            }
            let area = w * w;
            out[0] += area * m12;
            out[1] += area * m11 * m22;
            out[2] += area * m12 * m12;
            out[3] += area * m121;
            out[4] += area * m122;
            out[5] += area * m1212;
            e11[x] += w * m11;
            e22[x] += w * m22;
        }
        out[6] += w * kern1(x, x);
        let mut both = 0.0;
        for u in 0..cells {
            both += w * kern1(u, x) * kern2(u, x);
        }
        out[7] += w * both;
    }
    out
}

/// Human-readable summary of an oracle agreement run.
pub fn describe(name: &str, v: &OracleValue) -> String {
    format!(
        "{name}: closed form {:.15e}, cell sum {:.15e}, relative gap {:.2e}",
        v.closed_form,
        v.cell_sum,
        v.relative_gap()
    )
}
