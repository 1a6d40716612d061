//! A fixed battery of oracle cases, each checked for route agreement.

use drwave_core::oracle::{exact_nonlinearity_bias, exact_own_observation_bias, exact_projection_bias, OracleValue};
use drwave_core::{constant_dgp, worst_case_dgp, DyadicResolution, EstimatorKind};
use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCase {
    pub name: String,
    pub closed_form: f64,
    pub cell_sum: f64,
    pub relative_gap: f64,
    pub agree: bool,
}

impl OracleCase {
    fn new(name: String, v: OracleValue) -> Self {
        Self {
            name,
            closed_form: v.closed_form,
            cell_sum: v.cell_sum,
            relative_gap: v.relative_gap(),
            agree: v.routes_agree(),
        }
    }
}

/// Projection biases over several models and resolution pairs, then the
/// constant-model sample-reuse biases for every estimator.
pub fn oracle_cases() -> Result<Vec<OracleCase>> {
    let mut out = Vec::new();
    let models = [(0.25, 0.25, 1, 0.1, 14), (0.15, 0.4, 1, 0.02, 16), (0.6, 0.3, 2, 0.05, 7)];
    for (alpha, beta, dim, eps, top) in models {
        let dgp = worst_case_dgp(alpha, beta, dim, eps, top)?;
        for (l1, l2) in [(2u32, 2u32), (2, 5), (5, 3)] {
            let (k1, k2) = (DyadicResolution::new(l1, dim)?, DyadicResolution::new(l2, dim)?);
            for kind in EstimatorKind::ALL {
                let v = exact_projection_bias(&dgp, k1, k2, kind)?;
                let name = format!("projection {kind} a={alpha} b={beta} d={dim} k=({},{})", k1.size(), k2.size());
                out.push(OracleCase::new(name, v));
            }
        }
    }
    let dgp = constant_dgp(0.5, 0.5, 0.05, 1)?;
    for (l1, l2, n) in [(3u32, 5u32, 256usize), (5, 3, 1024)] {
        let (k1, k2) = (DyadicResolution::new(l1, 1)?, DyadicResolution::new(l2, 1)?);
        for kind in EstimatorKind::ALL {
            let sizes = format!("k=({},{}) n={n}", k1.size(), k2.size());
            let v = exact_nonlinearity_bias(&dgp, k1, k2, n, kind)?;
            out.push(OracleCase::new(format!("nonlinearity {kind} {sizes}"), v.exact));
            let v = exact_own_observation_bias(&dgp, k1, k2, n, kind)?;
            out.push(OracleCase::new(format!("own-observation {kind} {sizes}"), v.exact));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_case_agrees() {
        let cases = oracle_cases().unwrap();
        assert_eq!(cases.len(), 3 * 3 * 4 + 2 * 4 * 2);
        for c in &cases {
            assert!(c.agree, "{c:?}");
        }
    }
}
