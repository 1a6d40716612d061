//! Monte-Carlo rate experiments, regime tables and result files for the
//! `drwave-core` estimators.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod io;
pub mod oracle_suite;
pub mod rate_lab;
pub mod regime;

pub use config::{DgpSpec, EstimatorSpec, ExperimentSpec, SchemaVersion, TuningRule};
pub use error::{LabError, Result};
pub use io::{rate_csv, write_atomic, write_outputs, ExperimentRecord};
pub use rate_lab::{compare_to_theory, run_experiment, RateResult, Verdicts};
