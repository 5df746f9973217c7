// SPDX-License-Identifier: MIT OR Apache-2.0

//! Primal active-set method for `‖y - Ax‖² + λ‖Dx‖₁`.
//!
//! The iterate is piecewise constant. With the jumps and their signs held
//! fixed the objective is a quadratic in the block levels and is minimised
//! directly. A jump whose sign would flip is merged away by a ratio test;
//! once the block optimum keeps every sign, the position with the largest
//! violation of the optimality conditions becomes a new jump. Fused-lasso
//! solutions have few blocks, so every linear system is small.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

pub(super) struct Outcome {
    pub x: Vec<f64>,
    pub iterations: usize,
}

/// A jump between `x[at]` and `x[at + 1]`; `sign` is that of `x[at] - x[at + 1]`.
#[derive(Clone, Copy, Debug)]
struct Jump {
    at: usize,
    sign: f64,
}

/// Relative size of the stationarity violation treated as zero.
const KKT_TOL: f64 = 1e-9;

/// Runs the active-set iteration from `start`, with `gram2 = 2AᵀA` and
/// `aty2 = 2Aᵀy`. Returns `None` when a reduced system is singular, the
/// iteration cycles, or `max_iters` is reached; the caller then needs a
/// different method.
pub(super) fn solve(
    gram2: &DMatrix<f64>,
    aty2: &DVector<f64>,
    lambda: f64,
    start: &[f64],
    max_iters: usize,
) -> Option<Outcome> {
    let p = start.len();
    let scale = 1.0 + aty2.amax() + lambda;
    let tol = KKT_TOL * scale;

    // Block means of the starting point, with jump signs read off them.
    let size = start.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let cut: Vec<usize> = (0..p.saturating_sub(1))
        .filter(|&j| (start[j] - start[j + 1]).abs() > 1e-9 * size)
        .collect();
    let mut x = block_means(start, &cut);
    let mut jumps: Vec<Jump> = cut
        .iter()
        .filter(|&&j| x[j] != x[j + 1])
        .map(|&j| Jump {
            at: j,
            sign: (x[j] - x[j + 1]).signum(),
        })
        .collect();
    if jumps.len() != cut.len() {
        let at: Vec<usize> = jumps.iter().map(|j| j.at).collect();
        x = block_means(start, &at);
    }

    let mut just_added: Option<usize> = None;
    for it in 1..=max_iters {
        let bounds = bounds(&jumps, p);
        let k = bounds.len() - 1;
        // Reduced system over block levels.
        let mut rows = DMatrix::zeros(k, p);
        for b in 0..k {
            for i in bounds[b]..bounds[b + 1] {
                let mut row = rows.row_mut(b);
                row += gram2.row(i);
            }
        }
        let mut g = DMatrix::zeros(k, k);
        let mut h = DVector::zeros(k);
        for b in 0..k {
            for c in 0..k {
                g[(b, c)] = (bounds[c]..bounds[c + 1]).map(|j| rows[(b, j)]).sum();
            }
            h[b] = (bounds[b]..bounds[b + 1]).map(|i| aty2[i]).sum::<f64>();
            if b + 1 < k {
                h[b] -= lambda * jumps[b].sign;
            }
            if b > 0 {
                h[b] += lambda * jumps[b - 1].sign;
            }
        }
        let beta = g.cholesky()?.solve(&h);
        if beta.iter().any(|v| !v.is_finite()) {
            return None;
        }

        // Ratio test on jumps that would change sign.
        let mut step = 1.0;
        let mut blocking = None;
        for (b, jmp) in jumps.iter().enumerate() {
            let new = jmp.sign * (beta[b] - beta[b + 1]);
            if new <= 0.0 {
                let cur = jmp.sign * (x[jmp.at] - x[jmp.at + 1]);
                let t = if cur <= 0.0 { 0.0 } else { cur / (cur - new) };
                if t < step {
                    step = t;
                    blocking = Some(b);
                }
            }
        }

        if let Some(b) = blocking {
            if step == 0.0 && just_added == Some(jumps[b].at) {
                return None;
            }
            for (blk, w) in bounds.windows(2).enumerate() {
                for v in &mut x[w[0]..w[1]] {
                    *v += step * (beta[blk] - *v);
                }
            }
            jumps.remove(b);
            // Drop any other jump the step closed.
            jumps.retain(|j| j.sign * (x[j.at] - x[j.at + 1]) > 0.0);
            let at: Vec<usize> = jumps.iter().map(|j| j.at).collect();
            x = block_means(&x, &at);
            just_added = None;
            continue;
        }

        for (blk, w) in bounds.windows(2).enumerate() {
            x[w[0]..w[1]].fill(beta[blk]);
        }
        let grad = gram2 * DVector::from_column_slice(&x) - aty2;

        // Stationarity: grad_j + w_j - w_{j-1} = 0 with w = λ·(subgradient of
        // |x_j - x_{j+1}|), fixed at jumps and free inside blocks.
        let mut worst = tol;
        let mut split = None;
        for (blk, win) in bounds.windows(2).enumerate() {
            let (l, r) = (win[0], win[1]);
            let mut w = if blk == 0 {
                0.0
            } else {
                lambda * jumps[blk - 1].sign
            };
            for j in l..r {
                w -= grad[j];
                if j + 1 < r && w.abs() - lambda > worst {
                    worst = w.abs() - lambda;
                    split = Some(Jump {
                        at: j,
                        sign: w.signum(),
                    });
                }
            }
            let right = if blk + 1 == k {
                0.0
            } else {
                lambda * jumps[blk].sign
            };
            if (w - right).abs() > 1e3 * tol {
                return None;
            }
        }
        match split {
            None => return Some(Outcome { x, iterations: it }),
            Some(jmp) => {
                let pos = jumps.partition_point(|j| j.at < jmp.at);
                jumps.insert(pos, jmp);
                just_added = Some(jmp.at);
            }
        }
    }
    None
}

fn bounds(jumps: &[Jump], p: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(jumps.len() + 2);
    out.push(0);
    out.extend(jumps.iter().map(|j| j.at + 1));
    out.push(p);
    out
}

fn block_means(v: &[f64], cuts: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    let mut l = 0;
    for r in cuts.iter().map(|c| c + 1).chain(core::iter::once(v.len())) {
        let mean = v[l..r].iter().sum::<f64>() / (r - l) as f64;
        out[l..r].fill(mean);
        l = r;
    }
    out
}
