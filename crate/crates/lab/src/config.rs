//! Versioned JSON experiment configuration.
//!
//! Unknown keys are rejected everywhere so that a misspelt parameter can
//! never silently fall back to a default.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use drwave_core::synthetic::{DEFAULT_BOUNDS, DEFAULT_COVARIANCE, DEFAULT_OFFSET, DEFAULT_SPREAD};
use drwave_core::tuner::MaxSide;
use drwave_core::{
    DensityMode, DensitySettings, Design, Dgp, DyadicResolution, EstimatorConfig, EstimatorKind, NoiseModel,
    Regression, SplitScheme, WaveletSeriesFunction,
};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{LabError, Result};

pub const DEFAULT_REPLICATIONS: usize = 2000;
pub const DEFAULT_SLOPE_TOLERANCE: f64 = 0.15;
pub const MIN_REPLICATIONS: usize = 100;

/// Default n-grid `2^9 … 2^15`.
pub fn default_n_grid() -> Vec<usize> {
    (9..=15).map(|e| 1usize << e).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemaVersion {
    #[serde(rename = "v1")]
    V1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub version: SchemaVersion,
    pub name: String,
    pub dgp: DgpSpec,
    pub estimator: EstimatorSpec,
    pub tuning: TuningRule,
    /// Per-fold sample sizes.
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub slope_tolerance: f64,
    /// Expected MSE slope; when absent the rate formulas supply it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_mse_slope: Option<f64>,
}

fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}

fn default_tolerance() -> f64 {
    DEFAULT_SLOPE_TOLERANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum DgpSpec {
    /// Both regressions are worst-case wavelet series.
    WorstCase {
        alpha: f64,
        beta: f64,
        dim: usize,
        epsilon: f64,
        max_level: u32,
        #[serde(default = "default_offset")]
        offset: f64,
        #[serde(default = "default_covariance")]
        covariance: f64,
        #[serde(default = "default_spread")]
        spread: f64,
    },
    /// Constant regressions.
    Constant {
        treatment: f64,
        outcome: f64,
        covariance: f64,
        dim: usize,
        #[serde(default = "default_spread")]
        spread: f64,
    },
}

fn default_offset() -> f64 {
    DEFAULT_OFFSET
}

fn default_covariance() -> f64 {
    DEFAULT_COVARIANCE
}

fn default_spread() -> f64 {
    DEFAULT_SPREAD
}

impl DgpSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::WorstCase { dim, .. } | Self::Constant { dim, .. } => *dim,
        }
    }

    /// Smoothness pair, when the model has one.
    pub fn smoothness(&self) -> Option<(f64, f64)> {
        match self {
            Self::WorstCase { alpha, beta, .. } => Some((*alpha, *beta)),
            Self::Constant { .. } => None,
        }
    }

    pub fn build(&self) -> Result<Dgp> {
        Ok(match *self {
            Self::WorstCase { alpha, beta, dim, epsilon, max_level, offset, covariance, spread } => {
                let p = WaveletSeriesFunction::new(alpha, epsilon, max_level, dim)?.with_offset(offset);
                let b = WaveletSeriesFunction::new(beta, epsilon, max_level, dim)?.with_offset(offset);
                Dgp::new(
                    dim,
                    Regression::Series(p),
                    Regression::Series(b),
                    NoiseModel::new(covariance, spread),
                    DEFAULT_BOUNDS,
                    Design::Uniform,
                )?
            }
            Self::Constant { treatment, outcome, covariance, dim, spread } => Dgp::new(
                dim,
                Regression::Constant(treatment),
                Regression::Constant(outcome),
                NoiseModel::new(covariance, spread),
                DEFAULT_BOUNDS,
                Design::Uniform,
            )?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    #[serde(with = "by_name")]
    pub kind: EstimatorKind,
    #[serde(with = "by_name")]
    pub scheme: SplitScheme,
    #[serde(default)]
    pub cross_fit: bool,
    /// Estimate the design density with this smoothness instead of using `f ≡ 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_smoothness: Option<f64>,
}

impl EstimatorSpec {
    pub fn density_mode(&self) -> DensityMode {
        match self.density_smoothness {
            Some(gamma) => DensityMode::Estimated(DensitySettings::new(gamma)),
            None => DensityMode::Uniform,
        }
    }

    pub fn config(&self, k1: DyadicResolution, k2: DyadicResolution) -> EstimatorConfig {
        EstimatorConfig::new(self.kind, self.scheme, k1, k2)
            .with_cross_fit(self.cross_fit)
            .with_density(self.density_mode())
    }
}

/// How resolutions follow the per-fold sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum TuningRule {
    /// The same `(k1, k2)` at every n.
    Fixed { k1: usize, k2: usize },
    /// `c n^{d/(2s+d)}` with each regression's own smoothness.
    PredictionOptimal {
        #[serde(default = "unit")]
        constant: f64,
    },
    /// The rate-optimal rule for the estimator and scheme.
    Minimax {
        #[serde(default, with = "max_side")]
        max_side: MaxSide,
    },
    /// `k1 = c1 n^{e1}`, `k2 = c2 n^{e2}`.
    Power {
        e1: f64,
        e2: f64,
        #[serde(default = "unit")]
        c1: f64,
        #[serde(default = "unit")]
        c2: f64,
    },
}

fn unit() -> f64 {
    1.0
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => LabError::ConfigNotFound(path.to_path_buf()),
            _ => LabError::io(path, e),
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(LabError::InvalidSpec(msg));
        if self.n_grid.is_empty() {
            return invalid("n_grid is empty".into());
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("n_grid must be strictly increasing".into());
        }
        if self.n_grid[0] < 2 {
            return invalid("every n must be at least 2".into());
        }
        if self.replications < MIN_REPLICATIONS {
            return invalid(format!("need at least {MIN_REPLICATIONS} replications, got {}", self.replications));
        }
        if !(self.slope_tolerance > 0.0) {
            return invalid("slope_tolerance must be positive".into());
        }
        if self.estimator.cross_fit && self.estimator.scheme == SplitScheme::None {
            return invalid("cross-fitting needs a splitting scheme".into());
        }
        if matches!(self.tuning, TuningRule::PredictionOptimal { .. } | TuningRule::Minimax { .. })
            && self.dgp.smoothness().is_none()
        {
            return invalid("smoothness-based tuning needs a worst-case model".into());
        }
        if let (Some(gamma), Some((alpha, beta))) = (self.estimator.density_smoothness, self.dgp.smoothness()) {
            let threshold = drwave_core::gstar(alpha, beta, self.dgp.dim());
            if gamma <= threshold {
                return invalid(format!("density smoothness {gamma} must exceed {threshold}"));
            }
        }
        self.dgp.build()?;
        self.estimator
            .config(DyadicResolution::new(0, self.dgp.dim())?, DyadicResolution::new(0, self.dgp.dim())?)
            .layout()?;
        Ok(())
    }
}

/// Serde through `Display` / `FromStr`.
mod by_name {
    use super::*;

    pub fn serialize<T: Display, S: Serializer>(value: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(value)
    }

    pub fn deserialize<'de, T, D>(d: D) -> std::result::Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

mod max_side {
    use super::*;

    pub fn serialize<S: Serializer>(value: &MaxSide, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(match value {
            MaxSide::K1 => "k1",
            MaxSide::K2 => "k2",
        })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<MaxSide, D::Error> {
        match String::deserialize(d)?.as_str() {
            "k1" => Ok(MaxSide::K1),
            "k2" => Ok(MaxSide::K2),
            other => Err(serde::de::Error::custom(format!("max_side must be \"k1\" or \"k2\", got {other:?}"))),
        }
    }
}
