use thiserror::Error;

use crate::inverse::ConvergenceLog;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed problem file: {0}")]
    Malformed(String),

    #[error("non-monotone grid: {0}")]
    NonMonotoneGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("strong degeneration requires beta >= 1 (got {0})")]
    WeakDegeneration(f64),

    #[error("negative coefficient sample a = {value} at node {index}")]
    NegativeCoefficient { index: usize, value: f64 },

    #[error("theta is flat on panel {panel}: kernel is not integrable")]
    FlatTheta { panel: usize },

    #[error("degenerate kernel: theta difference {0} must be positive")]
    DegenerateKernel(f64),

    #[error("non-positive boundary flux {value} at node {index} (t = {t})")]
    NonPositiveFlux { index: usize, t: f64, value: f64 },

    #[error("non-positive overdetermination datum mu3 = {value} at node {index} (t = {t})")]
    NonPositiveDatum { index: usize, t: f64, value: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("limit hypothesis violated: fitted exponent {fitted} differs from {expected}")]
    LimitHypothesis { fitted: f64, expected: f64 },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64, log: Box<ConvergenceLog> },

    #[error("uniqueness probe start {start} failed: {source}")]
    ProbeStart { start: usize, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
