//! Haar-projection estimators of the expected conditional covariance
//! `E[Cov(A, Y | X)]` with exact oracles and rate formulas.
//!
//! The crate is `no_std` and needs only `alloc`. Randomness enters solely
//! through caller-supplied [`rand::RngCore`] streams.
#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod estimators;
pub mod nuisance;
pub mod oracle;
pub mod slope;
pub mod synthetic;
pub mod tuner;
pub mod wavelet;

pub use error::{Error, Result};
pub use estimators::{
    cross_fit, estimate, fold_layout, DensityMode, EstimatorConfig, EstimatorKind, FoldLayout, FoldRole, SplitScheme,
};
pub use nuisance::{
    fit_density, fit_regression, prediction_optimal_k, DensitySettings, FittedDensity, FittedRegressor, Response,
    Weighting,
};
pub use synthetic::{constant_dgp, sample, worst_case_dgp, Dataset, Design, Dgp, Fold, NoiseModel, Regression};
pub use tuner::{gstar, minimax_rate_exponent, minimax_resolution, regime_report, RegimeReport};
pub use wavelet::{inner_product, kernel_eval, project, DyadicResolution, PiecewiseConstantFn, WaveletSeriesFunction};
