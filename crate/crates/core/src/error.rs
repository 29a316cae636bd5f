use thiserror::Error;

use crate::svrg::RunTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("not positive definite")]
    NotPositiveDefinite,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("schedule infeasible at this scale: {0}")]
    ScheduleInfeasible(String),

    #[error("budget below first stage: budget {budget} < k0 + 1 = {required}")]
    BudgetBelowFirstStage { budget: u64, required: u64 },

    #[error("iterate diverged at stage {}, inner step {}: |w| = {:e}", .0.stage, .0.step, .0.iterate_norm)]
    Diverged(Box<Divergence>),

    #[error("ERM not unique: {0}")]
    ErmNotUnique(String),

    #[error("Newton solve did not converge after {iterations} iterations (gradient norm {residual:e})")]
    NewtonNotConverged { iterations: usize, residual: f64 },

    #[error("missing key: {0}")]
    MissingKey(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// State captured when the divergence guard trips inside a stage.
#[derive(Debug, Clone)]
pub struct Divergence {
    pub stage: usize,
    pub step: u64,
    pub iterate_norm: f64,
    pub threshold: f64,
    pub w_tilde: Vec<f64>,
    /// Stages that completed before the failure.
    pub partial: Option<RunTrace>,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
