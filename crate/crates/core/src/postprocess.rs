// SPDX-License-Identifier: MIT OR Apache-2.0

//! Change-point refinement: the mean filter screens the raw change points of
//! a fit with a local two-window statistic, the time filter collapses
//! clusters of survivors to their medians.
//!
//! Indices are 1-based left endpoints, as in [`crate::signal`].

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::signal::{change_points_tol, DEFAULT_CP_TOL};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub bandwidth: usize,
    pub tau: f64,
    pub gap: usize,
}

impl FilterConfig {
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.bandwidth == 0 || 2 * self.bandwidth >= p {
            return Err(Error::param(format!(
                "bandwidth must satisfy 1 <= b and 2b < p, got b = {} with p = {p}",
                self.bandwidth
            )));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::param(format!(
                "tau must be positive and finite, got {}",
                self.tau
            )));
        }
        if self.gap == 0 {
            return Err(Error::param("gap t must be at least 1"));
        }
        Ok(())
    }
}

/// The three stages of the pipeline together with the configuration used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChangePointReport {
    pub raw: Vec<usize>,
    pub filtered: Vec<usize>,
    pub pruned: Vec<usize>,
    pub config: FilterConfig,
    /// Set when the permutation threshold found no signal; `filtered` and
    /// `pruned` are then empty by convention.
    #[serde(default)]
    pub no_signal: bool,
}

impl ChangePointReport {
    /// Report for a fit judged to carry no change points.
    pub fn no_signal(raw: Vec<usize>, config: FilterConfig) -> Self {
        Self {
            raw,
            filtered: Vec::new(),
            pruned: Vec::new(),
            config,
            no_signal: true,
        }
    }
}

/// Candidate set `I_F`: positions in `[b, p - b]` within distance `0` or `b`
/// of a raw change point, plus both endpoints.
pub fn candidate_set(raw: &[usize], b: usize, p: usize) -> Result<Vec<usize>> {
    if b == 0 || 2 * b > p {
        return Err(Error::param(format!(
            "bandwidth must satisfy 1 <= b and 2b <= p, got b = {b}, p = {p}"
        )));
    }
    let (lo, hi) = (b, p - b);
    let mut out = Vec::with_capacity(3 * raw.len() + 2);
    out.push(lo);
    out.push(hi);
    for &r in raw {
        for i in [r.checked_sub(b), Some(r), Some(r + b)]
            .into_iter()
            .flatten()
        {
            if (lo..=hi).contains(&i) {
                out.push(i);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Prefix sums with a leading zero, so window sums are differences.
pub(crate) fn prefix_sums(x: &[f64]) -> Vec<f64> {
    let mut s = Vec::with_capacity(x.len() + 1);
    s.push(0.0);
    let mut acc = 0.0;
    for v in x {
        acc += v;
        s.push(acc);
    }
    s
}

/// `F_i` from prefix sums; `i` must already be range-checked.
#[inline]
pub(crate) fn stat_from_prefix(s: &[f64], i: usize, b: usize) -> f64 {
    let right = s[i + b] - s[i];
    let left = s[i] - s[i - b];
    (right - left) / b as f64
}

/// `F_i = mean(x̂_{i+1..i+b}) - mean(x̂_{i-b+1..i})`, 1-based.
pub fn mean_filter_stat(x: &[f64], i: usize, b: usize) -> Result<f64> {
    let p = x.len();
    if b == 0 || i < b || i + b > p {
        return Err(Error::Index {
            index: i,
            lo: b,
            hi: p.saturating_sub(b),
        });
    }
    let right: f64 = x[i..i + b].iter().sum();
    let left: f64 = x[i - b..i].iter().sum();
    Ok((right - left) / b as f64)
}

/// `S_I`: candidates whose `|F_i|` reaches `tau`.
pub fn mean_filter(x: &[f64], b: usize, tau: f64) -> Result<Vec<usize>> {
    mean_filter_raw(x, &change_points_tol(x, DEFAULT_CP_TOL), b, tau)
}

/// As [`mean_filter`] with an explicit raw change-point set.
pub fn mean_filter_raw(x: &[f64], raw: &[usize], b: usize, tau: f64) -> Result<Vec<usize>> {
    let cand = candidate_set(raw, b, x.len())?;
    let s = prefix_sums(x);
    Ok(cand
        .into_iter()
        .filter(|&i| stat_from_prefix(&s, i, b).abs() >= tau)
        .collect())
}

/// `S_T`: splits the sorted set at gaps strictly larger than `t` and keeps
/// the median of each run (the smaller middle element for even runs).
pub fn time_filter(s_i: &[usize], t: usize) -> Vec<usize> {
    if s_i.len() <= 1 {
        return s_i.to_vec();
    }
    let mut sorted = s_i.to_vec();
    sorted.sort_unstable();
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=sorted.len() {
        if k == sorted.len() || sorted[k] - sorted[k - 1] > t {
            out.push(sorted[start + (k - start - 1) / 2]);
            start = k;
        }
    }
    out
}

/// Runs raw extraction, mean filter and time filter on a fit.
pub fn localise(x: &[f64], cfg: &FilterConfig) -> Result<ChangePointReport> {
    cfg.validate(x.len())?;
    let raw = change_points_tol(x, DEFAULT_CP_TOL);
    let filtered = mean_filter_raw(x, &raw, cfg.bandwidth, cfg.tau)?;
    let pruned = time_filter(&filtered, cfg.gap);
    Ok(ChangePointReport {
        raw,
        filtered,
        pruned,
        config: *cfg,
        no_signal: false,
    })
}
