//! Series utilities, changepoint detection, and lead-lag correlation.

mod pelt;
mod series;
mod xcorr;

use thiserror::Error;

pub use pelt::{default_penalty, pelt, ChangepointResult, CostModel, L2Cost, Pelt};
pub use series::{
    aggregate, count_series, month_start, normalize_max, z_score, zero_extend, Granularity, Series,
};
pub use xcorr::{
    cross_correlate, interpret_lag, pearson, CrossCorrelator, LagCorrelation, LeadLag,
    DEFAULT_MAX_LAG, DEFAULT_MIN_OVERLAP,
};

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),
    #[error("penalty must be positive, got {0}")]
    InvalidPenalty(f64),
    #[error("series too short: need at least {needed} points, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("series granularities differ")]
    GranularityMismatch,
}
