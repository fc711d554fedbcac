//! Error type shared by every module of the engine.

use thiserror::Error;

/// All recoverable failures raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid denominator: {0}")]
    InvalidDenominator(String),

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("weights must sum to 1 (sum = {sum})")]
    Normalization { sum: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("infeasible moments: mu = {mu}, sigma = {sigma}; a beta law needs sigma^2 < mu(1-mu) = {bound}")]
    InfeasibleMoments { mu: f64, sigma: f64, bound: f64 },

    #[error("numerical failure in {context}: {detail}")]
    Numerical { context: &'static str, detail: String },

    #[error("severity cannot be fitted: {0}")]
    SeverityUnfittable(String),

    #[error("unbounded return time: CVaR = {cvar} reaches the upper end of the support")]
    UnboundedReturnTime { cvar: f64 },

    #[error("ordering error: {0}")]
    Ordering(String),

    #[error("infeasible correlation target {target}: {violated} bound is {bound}")]
    InfeasibleCorrelation {
        target: f64,
        violated: &'static str,
        bound: f64,
    },

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("unsupported parameter range: {0}")]
    UnsupportedRange(String),

    #[error("infeasible parameter mapping: {0}")]
    Infeasible(String),

    #[error("nonstationary spillover: |phi| = {phi} >= 1")]
    Nonstationary { phi: f64 },

    #[error("singular design matrix")]
    SingularDesign,

    #[error("insufficient data: need at least {need} observations, got {got}")]
    SampleSize { need: usize, got: usize },

    #[error("regime is empty: {0}")]
    RegimeEmpty(String),

    #[error("input error: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn numerical(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical {
            context,
            detail: detail.into(),
        }
    }
}
