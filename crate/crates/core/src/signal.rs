// SPDX-License-Identifier: MIT OR Apache-2.0

//! First-difference primitives and piecewise-constant signals.
//!
//! Change points are 1-based left endpoints: `i` is a change point of `v`
//! when `v[i] != v[i + 1]` in 1-based terms, so every change-point set is a
//! subset of `{1, ..., p - 1}`. All file formats use the same convention.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default tolerance for extracting change points from solver output.
pub const DEFAULT_CP_TOL: f64 = 1e-8;

/// The `(p - 1) x p` first-difference operator, `(Dv)_i = v_i - v_{i+1}`.
///
/// Never stored as a matrix; only its action and the action of its
/// transpose are provided.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DifferenceOp {
    p: usize,
}

impl DifferenceOp {
    pub fn new(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::dim("difference operator needs p >= 2"));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Writes `Dv` into `out` (length `p - 1`).
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.p);
        debug_assert_eq!(out.len(), self.p - 1);
        for (o, w) in out.iter_mut().zip(v.windows(2)) {
            *o = w[0] - w[1];
        }
    }

    /// Writes `Dᵀw` into `out` (length `p`).
    pub fn apply_transpose_into(&self, w: &[f64], out: &mut [f64]) {
        debug_assert_eq!(w.len(), self.p - 1);
        debug_assert_eq!(out.len(), self.p);
        let m = self.p - 1;
        out[0] = w[0];
        for j in 1..m {
            out[j] = w[j] - w[j - 1];
        }
        out[m] = -w[m - 1];
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.p - 1];
        self.apply_into(v, &mut out);
        out
    }

    pub fn apply_transpose(&self, w: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.p];
        self.apply_transpose_into(w, &mut out);
        out
    }
}

/// `Dv` for a vector of length at least two.
pub fn apply_d(v: &[f64]) -> Result<Vec<f64>> {
    Ok(DifferenceOp::new(v.len())?.apply(v))
}

/// `‖Dv‖₁`, zero for vectors of length 0 or 1.
pub fn total_variation(v: &[f64]) -> f64 {
    v.windows(2).map(|w| (w[0] - w[1]).abs()).sum()
}

/// Exact change points `{i : v_i != v_{i+1}}`, ascending and 1-based.
pub fn change_points(v: &[f64]) -> Vec<usize> {
    v.windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] != w[1])
        .map(|(i, _)| i + 1)
        .collect()
}

/// Change points whose jump exceeds `tol` in absolute value.
///
/// `tol = 0` coincides with [`change_points`].
pub fn change_points_tol(v: &[f64], tol: f64) -> Vec<usize> {
    debug_assert!(tol >= 0.0);
    v.windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0] - w[1]).abs() > tol)
        .map(|(i, _)| i + 1)
        .collect()
}

/// A piecewise-constant vector together with its segment structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseSignal {
    pub values: Vec<f64>,
    /// 1-based left endpoints of the jumps.
    pub change_points: Vec<usize>,
    /// One level per segment, `change_points.len() + 1` of them.
    pub levels: Vec<f64>,
    /// Shortest segment length, counting both boundary segments.
    pub min_spacing: usize,
    /// Smallest absolute jump; `None` when there are no change points.
    pub min_jump: Option<f64>,
}

impl PiecewiseSignal {
    pub fn p(&self) -> usize {
        self.values.len()
    }

    pub fn num_change_points(&self) -> usize {
        self.change_points.len()
    }

    pub fn total_variation(&self) -> f64 {
        self.levels.windows(2).map(|w| (w[0] - w[1]).abs()).sum()
    }
}

/// Builds a piecewise-constant signal of length `p` from its boundaries and
/// segment levels.
pub fn make_signal(boundaries: &[usize], levels: &[f64], p: usize) -> Result<PiecewiseSignal> {
    if p == 0 {
        return Err(Error::dim("signal length must be positive"));
    }
    if levels.len() != boundaries.len() + 1 {
        return Err(Error::InvalidSignal(alloc::format!(
            "{} boundaries need {} levels, got {}",
            boundaries.len(),
            boundaries.len() + 1,
            levels.len()
        )));
    }
    let mut prev = 0usize;
    for &b in boundaries {
        if b <= prev || b >= p {
            return Err(Error::InvalidSignal(alloc::format!(
                "boundaries must be strictly increasing inside [1, {}]; got {b} after {prev}",
                p - 1
            )));
        }
        prev = b;
    }
    if let Some(k) = levels.windows(2).position(|w| w[0] == w[1]) {
        return Err(Error::InvalidSignal(alloc::format!(
            "levels {k} and {} are equal, so boundary {} is not a jump",
            k + 1,
            boundaries[k]
        )));
    }

    let mut values = Vec::with_capacity(p);
    let mut start = 0usize;
    let mut min_spacing = usize::MAX;
    for (seg, &level) in levels.iter().enumerate() {
        let end = boundaries.get(seg).copied().unwrap_or(p);
        min_spacing = min_spacing.min(end - start);
        values.resize(end, level);
        start = end;
    }
    let min_jump = levels
        .windows(2)
        .map(|w| (w[0] - w[1]).abs())
        .fold(None, |acc: Option<f64>, j| {
            Some(acc.map_or(j, |a| a.min(j)))
        });

    Ok(PiecewiseSignal {
        values,
        change_points: boundaries.to_vec(),
        levels: levels.to_vec(),
        min_spacing,
        min_jump,
    })
}
