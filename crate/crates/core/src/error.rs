// SPDX-License-Identifier: MIT OR Apache-2.0

use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// One step of the constrained-estimator bisection, kept for diagnostics.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BracketStep {
    pub lambda: f64,
    pub achieved_tv: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("index {index} outside the valid range [{lo}, {hi}]")]
    Index { index: usize, lo: usize, hi: usize },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("bisection on lambda lost its bracket (achieved TV not monotone in lambda); {} steps recorded", trace.len())]
    Bisection { trace: Vec<BracketStep> },

    #[error("need at least {needed} records to aggregate, got {got}")]
    TooFewRecords { needed: usize, got: usize },
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Self::Dimension(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Self::Parameter(msg.into())
    }
}
