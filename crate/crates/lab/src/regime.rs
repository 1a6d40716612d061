//! Regime tables over `(α, β)` grids and their boolean-mask form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use drwave_core::tuner::TuningFlags;
use drwave_core::{regime_report, EstimatorKind, SplitScheme};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Sample size used for the concrete resolutions of a regime report.
pub const REPORT_SAMPLE_SIZE: usize = 4096;

/// Parses `start:stop:count` (inclusive, evenly spaced) or a comma list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || LabError::InvalidSpec(format!("bad grid {text:?}; use start:stop:count or a comma list"));
    let values: Vec<f64> = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, count] = parts[..] else { return Err(bad()) };
        let (start, stop): (f64, f64) =
            (start.trim().parse().map_err(|_| bad())?, stop.trim().parse().map_err(|_| bad())?);
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        match count {
            0 => return Err(bad()),
            1 => vec![start],
            _ => (0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect(),
        }
    } else {
        text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
    };
    if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(LabError::InvalidSpec(format!("grid {text:?} needs positive smoothness values")));
    }
    Ok(values)
}

/// The golden grid: `i / 50` for `i = 1..=50`.
pub fn golden_grid() -> Vec<f64> {
    (1..=50).map(|i| i as f64 / 50.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub alpha: f64,
    pub beta: f64,
    pub kind: String,
    pub scheme: String,
    pub achievable: bool,
    pub best_exponent: f64,
    pub minimax_exponent: f64,
    pub k1: usize,
    pub k2: usize,
    pub flags: BTreeMap<String, bool>,
}

/// One row per grid point and selected estimator/scheme, `α` outermost.
pub fn regime_rows(
    alphas: &[f64],
    betas: &[f64],
    dim: usize,
    kinds: &[EstimatorKind],
    schemes: &[SplitScheme],
    n: usize,
) -> Result<Vec<RegimeRow>> {
    let mut rows = Vec::new();
    for &alpha in alphas {
        for &beta in betas {
            let report = regime_report(alpha, beta, dim, n)?;
            for entry in report.entries.iter().filter(|e| kinds.contains(&e.kind) && schemes.contains(&e.scheme)) {
                rows.push(RegimeRow {
                    alpha,
                    beta,
                    kind: entry.kind.to_string(),
                    scheme: entry.scheme.to_string(),
                    achievable: entry.achievable,
                    best_exponent: entry.best_exponent,
                    minimax_exponent: report.minimax_exponent,
                    k1: entry.resolutions.0.size(),
                    k2: entry.resolutions.1.size(),
                    flags: flag_map(&entry.flags),
                });
            }
        }
    }
    Ok(rows)
}

fn flag_map(flags: &TuningFlags) -> BTreeMap<String, bool> {
    TuningFlags::NAMES.iter().map(|n| n.to_string()).zip(flags.as_array()).collect()
}

/// CSV with columns `alpha,beta,kind,scheme,achievable,bestExponent,minimaxExponent,k1,k2` and one per flag.
pub fn regime_csv(rows: &[RegimeRow]) -> String {
    let mut out = String::from("alpha,beta,kind,scheme,achievable,bestExponent,minimaxExponent,k1,k2");
    for name in TuningFlags::NAMES {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for r in rows {
        write!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.alpha, r.beta, r.kind, r.scheme, r.achievable, r.best_exponent, r.minimax_exponent, r.k1, r.k2
        )
        .expect("string write");
        for name in TuningFlags::NAMES {
            write!(out, ",{}", r.flags[name]).expect("string write");
        }
        out.push('\n');
    }
    out
}

/// Boolean masks; each mask row is one `α`, each character one `β`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskDocument {
    pub dim: usize,
    pub alphas: Vec<String>,
    pub betas: Vec<String>,
    pub entries: Vec<MaskEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskEntry {
    pub kind: String,
    pub scheme: String,
    pub achievable: Vec<String>,
    pub flags: BTreeMap<String, Vec<String>>,
}

pub fn mask_document(alphas: &[f64], betas: &[f64], dim: usize) -> Result<MaskDocument> {
    let combos: Vec<(EstimatorKind, SplitScheme)> =
        EstimatorKind::ALL.into_iter().flat_map(|k| SplitScheme::ALL.into_iter().map(move |s| (k, s))).collect();
    let reports = alphas
        .iter()
        .map(|&a| {
            betas
                .iter()
                .map(|&b| regime_report(a, b, dim, REPORT_SAMPLE_SIZE))
                .collect::<std::result::Result<Vec<_>, _>>()
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let bit = |v: bool| if v { '1' } else { '0' };
    let entries = combos
        .into_iter()
        .map(|(kind, scheme)| {
            let mask = |f: &dyn Fn(&drwave_core::tuner::RegimeEntry) -> bool| -> Vec<String> {
                reports.iter().map(|row| row.iter().map(|r| bit(f(r.entry(kind, scheme)))).collect()).collect()
            };
            let flags = TuningFlags::NAMES
                .iter()
                .enumerate()
                .map(|(i, name)| (name.to_string(), mask(&|e| e.flags.as_array()[i])))
                .collect();
            MaskEntry { kind: kind.to_string(), scheme: scheme.to_string(), achievable: mask(&|e| e.achievable), flags }
        })
        .collect();
    Ok(MaskDocument {
        dim,
        alphas: alphas.iter().map(|a| a.to_string()).collect(),
        betas: betas.iter().map(|b| b.to_string()).collect(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0.1:0.3:3").unwrap().len(), 3);
        assert_eq!(parse_grid("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert!(parse_grid("0.1:0.3").is_err());
        assert!(parse_grid("0,0.2").is_err());
        assert!(parse_grid("a").is_err());
    }

    #[test]
    fn three_by_three_filtered_table() {
        let grid = parse_grid("0.1:0.9:3").unwrap();
        let rows =
            regime_rows(&grid, &grid, 1, &[EstimatorKind::If], &[SplitScheme::Double], REPORT_SAMPLE_SIZE).unwrap();
        assert_eq!(rows.len(), 9);
        let csv = regime_csv(&rows);
        assert_eq!(csv.lines().count(), 10);
        assert!(csv.starts_with("alpha,beta,kind,scheme,achievable,bestExponent,"));
    }
}
