// SPDX-License-Identifier: MIT OR Apache-2.0

//! Empirical restricted-isometry envelopes over TV balls.
//!
//! For a budget `t` the constraint set is `{x : ‖x‖ = 1, ‖Dx‖₁ ≤ t}`. The
//! extremes of `‖Ax‖` over that set cannot be computed in general, so the
//! certificate reports the extremes over random feasible samples, each
//! refined by projected gradient steps. It is an empirical lower/upper
//! envelope, not a bound.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // unused when std is linked
use num_traits::Float;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::seed::{self, purpose};
use crate::signal::total_variation;
use crate::{Error, Result};

/// Success probability of the geometric segment count.
const SEGMENT_P: f64 = 0.25;
const REFINE_STEPS: usize = 100;
const FEAS_TOL: f64 = 1e-10;

pub const ENVELOPE_LABEL: &str = "empirical lower/upper envelope";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RicCertificate {
    pub label: String,
    pub t: f64,
    pub samples: usize,
    pub min_norm: f64,
    pub max_norm: f64,
    /// Feasible vectors attaining `min_norm` and `max_norm`.
    pub min_witness: Vec<f64>,
    pub max_witness: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval_ok: Option<bool>,
}

impl RicCertificate {
    /// Compares the envelope with the interval of [`isometry_interval`]
    /// widened by `margin` on both sides.
    pub fn check_interval(&mut self, zeta: f64, margin: f64) -> bool {
        let (lo, hi) = isometry_interval(zeta);
        let ok = self.min_norm >= lo - margin && self.max_norm <= hi + margin;
        self.zeta = Some(zeta);
        self.margin = Some(margin);
        self.interval_ok = Some(ok);
        ok
    }
}

/// `[1 - ζ - (1 - ζ)/√2, 1 + ζ + (1 - ζ)/√2]`, the range of `‖Ax‖` over
/// the constraint set that holds with high probability for row-scaled
/// sub-Gaussian designs whose covariance has eigenvalues in
/// `[(1 - ζ)², (1 + ζ)²]`.
pub fn isometry_interval(zeta: f64) -> (f64, f64) {
    let half = (1.0 - zeta) / 2.0.sqrt();
    (1.0 - zeta - half, 1.0 + zeta + half)
}

fn normalise(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|a| *a /= n);
    }
    n
}

/// Maps a unit vector into the constraint set by pulling it toward the
/// constant unit vector on the same side, `normalise((1 - θ)v + θc)`, with
/// the smallest `θ` (to bisection accuracy) that meets the TV budget.
fn pull_to_budget(v: &mut Vec<f64>, t: f64) {
    let p = v.len();
    if total_variation(v) <= t {
        return;
    }
    let side = if v.iter().sum::<f64>() < 0.0 {
        -1.0
    } else {
        1.0
    };
    let c = side / (p as f64).sqrt();
    let mix = |theta: f64| -> Vec<f64> {
        let mut w: Vec<f64> = v.iter().map(|a| (1.0 - theta) * a + theta * c).collect();
        normalise(&mut w);
        w
    };
    if t <= 0.0 {
        v.iter_mut().for_each(|a| *a = c);
        return;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total_variation(&mix(mid)) <= t {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    *v = mix(hi);
}

fn random_piecewise(p: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut segments = 1;
        while segments < p && !rng.random_bool(SEGMENT_P) {
            segments += 1;
        }
        let mut cuts: Vec<usize> = if segments > 1 {
            sample(rng, p - 1, segments - 1)
                .into_iter()
                .map(|c| c + 1)
                .collect()
        } else {
            Vec::new()
        };
        cuts.sort_unstable();
        cuts.push(p);
        let mut v = Vec::with_capacity(p);
        for &end in &cuts {
            let level: f64 = rng.sample(StandardNormal);
            v.resize(end, level);
        }
        if normalise(&mut v) > 0.0 {
            return v;
        }
    }
}

/// `count` random unit vectors with `‖Dv‖₁ ≤ t`: piecewise-constant draws
/// with a geometric number of segments and Gaussian levels, normalised and
/// pulled toward the constant direction when over budget.
pub fn sample_constraint_set(p: usize, t: f64, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if p == 0 {
        return Err(Error::param("p must be positive"));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param("TV budget t must be finite and nonnegative"));
    }
    if count == 0 {
        return Err(Error::param("need at least one sample"));
    }
    Ok((0..count as u64)
        .map(|k| {
            let mut rng = seed::rng_for(seed, &[purpose::RIC_SAMPLE, k]);
            let mut v = random_piecewise(p, &mut rng);
            pull_to_budget(&mut v, t);
            v
        })
        .collect())
}

fn ax_norm(a: &DMatrix<f64>, x: &[f64]) -> f64 {
    (a * DVector::from_column_slice(x)).norm()
}

/// Largest eigenvalue of `AᵀA` by power iteration.
fn gram_norm(gram: &DMatrix<f64>) -> f64 {
    let p = gram.nrows();
    let mut v = DVector::from_element(p, 1.0 / (p as f64).sqrt());
    // Break exact orthogonality to the top eigenvector.
    v[0] += 0.1;
    let mut est = 0.0;
    for _ in 0..100 {
        let w = gram * &v;
        let n = w.norm();
        if n == 0.0 {
            return 0.0;
        }
        est = v.dot(&w) / v.norm_squared();
        v = w / n;
    }
    est.max(0.0)
}

/// Projected gradient on `sign·‖Ax‖²` from `start`; returns the best
/// feasible point seen and its `‖Ax‖`.
fn refine(
    a: &DMatrix<f64>,
    gram: &DMatrix<f64>,
    step: f64,
    t: f64,
    start: &[f64],
    sign: f64,
) -> (Vec<f64>, f64) {
    let mut best = start.to_vec();
    let mut best_val = ax_norm(a, start);
    let mut x = DVector::from_column_slice(start);
    for _ in 0..REFINE_STEPS {
        let g = gram * &x * 2.0;
        let mut next: Vec<f64> = (&x + g * (sign * step)).as_slice().to_vec();
        if normalise(&mut next) == 0.0 {
            break;
        }
        pull_to_budget(&mut next, t);
        let val = ax_norm(a, &next);
        if sign * (val - best_val) > 0.0 {
            best_val = val;
            best.copy_from_slice(&next);
        }
        x = DVector::from_vec(next);
    }
    (best, best_val)
}

/// Extremes of `‖Ax‖` over `count` feasible samples, each extreme refined
/// by projected gradient.
pub fn empirical_ric(a: &DMatrix<f64>, t: f64, count: usize, seed: u64) -> Result<RicCertificate> {
    let p = a.ncols();
    let samples = sample_constraint_set(p, t, count, seed)?;
    let mut lo = (f64::INFINITY, 0);
    let mut hi = (f64::NEG_INFINITY, 0);
    for (k, v) in samples.iter().enumerate() {
        let n = ax_norm(a, v);
        if n < lo.0 {
            lo = (n, k);
        }
        if n > hi.0 {
            hi = (n, k);
        }
    }
    let gram = a.tr_mul(a);
    let l = gram_norm(&gram);
    let step = if l > 0.0 { 0.25 / l } else { 0.0 };
    let (min_witness, min_norm) = refine(a, &gram, step, t, &samples[lo.1], -1.0);
    let (max_witness, max_norm) = refine(a, &gram, step, t, &samples[hi.1], 1.0);
    Ok(RicCertificate {
        label: ENVELOPE_LABEL.into(),
        t,
        samples: count,
        min_norm,
        max_norm,
        min_witness,
        max_witness,
        zeta: None,
        margin: None,
        interval_ok: None,
    })
}

/// True when `v` lies in the constraint set up to `1e-10`.
pub fn is_feasible(v: &[f64], t: f64) -> bool {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    (n - 1.0).abs() <= FEAS_TOL && total_variation(v) <= t + FEAS_TOL
}
