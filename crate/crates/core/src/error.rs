use alloc::string::String;

/// Errors raised by the estimation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point coordinate {value} lies outside the unit cube")]
    OutOfDomain { value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid resolution: {0}")]
    InvalidResolution(String),

    #[error("fold {fold} is empty")]
    EmptyFold { fold: usize },

    #[error("sample size must be positive")]
    EmptySample,

    #[error("amplitude budget violated: range [{low}, {high}] leaves bounds [{lower}, {upper}]")]
    BudgetViolated { low: f64, high: f64, lower: f64, upper: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("density weight was fitted on fold {fold}, the same fold it would weight")]
    OverlappingFolds { fold: usize },

    #[error("oracle requires {0}")]
    UnsupportedModel(&'static str),

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("value {0} is not positive")]
    NonPositive(f64),

    #[error("estimate is not finite")]
    NonFinite,
}

pub type Result<T> = core::result::Result<T, Error>;
