// SPDX-License-Identifier: MIT OR Apache-2.0

//! Fused-lasso estimators.
//!
//! * [`prox_tv_1d`]: exact solution for the identity design.
//! * [`fused_lasso`]: `‖y - Ax‖² + λ₂‖Dx‖₁` for any design.
//! * [`sparse_fused_lasso`]: adds `λ₁‖x‖₁`.
//! * [`constrained_fused_lasso`]: `min ‖y - Ax‖²` subject to `‖Dx‖₁ ≤ V`.
//!
//! Objectives carry no `1/2` factor in front of the squared loss.

mod active;
mod admm;
mod constrained;
mod tv;

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // unused when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

pub use admm::AdmmSolver;
pub use constrained::constrained_fused_lasso;
pub use tv::{prox_tv_1d, prox_tv_observed};

use crate::design::DesignMatrix;
use crate::signal::{change_points_tol, total_variation, DEFAULT_CP_TOL};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub admm_rho: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warm_start: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            abs_tol: 1e-7,
            rel_tol: 1e-5,
            admm_rho: 1.0,
            warm_start: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::param("max_iters must be at least 1"));
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::param("solver tolerances must be positive"));
        }
        if !(self.admm_rho > 0.0 && self.admm_rho.is_finite()) {
            return Err(Error::param("admm_rho must be positive and finite"));
        }
        Ok(())
    }
}

/// A fitted coefficient vector and solver diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorFit {
    pub coefficients: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `‖Dx̂‖₁`.
    pub achieved_tv: f64,
    /// `‖x̂‖₁`.
    pub achieved_l1: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl EstimatorFit {
    fn exact(coefficients: Vec<f64>, objective: f64, lambda1: f64, lambda2: f64) -> Self {
        Self {
            achieved_tv: total_variation(&coefficients),
            achieved_l1: coefficients.iter().map(|v| v.abs()).sum(),
            coefficients,
            objective,
            iterations: 0,
            converged: true,
            lambda1,
            lambda2,
        }
    }
}

/// `‖y - Ax‖² + λ₁‖x‖₁ + λ₂‖Dx‖₁`.
pub fn objective_value(a: &DMatrix<f64>, y: &[f64], x: &[f64], lambda1: f64, lambda2: f64) -> f64 {
    let fitted = a * DVector::from_column_slice(x);
    let loss: f64 = fitted.iter().zip(y).map(|(f, v)| (v - f) * (v - f)).sum();
    let l1: f64 = if lambda1 > 0.0 {
        x.iter().map(|v| v.abs()).sum()
    } else {
        0.0
    };
    let tv = if lambda2 > 0.0 {
        total_variation(x)
    } else {
        0.0
    };
    loss + lambda1 * l1 + lambda2 * tv
}

fn check_problem(a: &DesignMatrix, y: &[f64]) -> Result<()> {
    if a.n() != y.len() {
        return Err(Error::dim(alloc::format!(
            "design is {}x{} but response has length {}",
            a.n(),
            a.p(),
            y.len()
        )));
    }
    if a.p() == 0 {
        return Err(Error::dim("design has no columns"));
    }
    Ok(())
}

/// Penalised fused lasso, `argmin ‖y - Ax‖² + λ₂‖Dx‖₁`.
///
/// Identity designs are solved exactly with [`prox_tv_1d`]; `λ₂ = 0` gives
/// the minimum-norm least-squares fit; everything else goes through ADMM.
/// A fit that hits `max_iters` is returned with `converged = false`.
pub fn fused_lasso(
    a: &DesignMatrix,
    y: &[f64],
    lambda2: f64,
    cfg: &SolverConfig,
) -> Result<EstimatorFit> {
    sparse_fused_lasso(a, y, 0.0, lambda2, cfg)
}

/// Doubly penalised fused lasso, `argmin ‖y - Ax‖² + λ₁‖x‖₁ + λ₂‖Dx‖₁`.
///
/// For the identity design the solution is the soft-thresholded 1-D fused
/// lasso (threshold `λ₁/2`), which is exact.
pub fn sparse_fused_lasso(
    a: &DesignMatrix,
    y: &[f64],
    lambda1: f64,
    lambda2: f64,
    cfg: &SolverConfig,
) -> Result<EstimatorFit> {
    check_problem(a, y)?;
    cfg.validate()?;
    if !(lambda1 >= 0.0 && lambda2 >= 0.0) || !lambda1.is_finite() || !lambda2.is_finite() {
        return Err(Error::param("penalties must be finite and nonnegative"));
    }
    if a.is_identity() {
        let mut x = prox_tv_1d(y, lambda2);
        if lambda1 > 0.0 {
            let t = 0.5 * lambda1;
            for v in &mut x {
                *v = if *v > t {
                    *v - t
                } else if *v < -t {
                    *v + t
                } else {
                    0.0
                };
            }
        }
        let obj = objective_value(&a.data, y, &x, lambda1, lambda2);
        return Ok(EstimatorFit::exact(x, obj, lambda1, lambda2));
    }
    if lambda1 == 0.0 && lambda2 == 0.0 {
        return least_squares(a, y);
    }
    AdmmSolver::new(&a.data, y, cfg)?.solve(lambda1, lambda2)
}

/// Minimum-norm least-squares fit (the unpenalised estimator).
pub fn least_squares(a: &DesignMatrix, y: &[f64]) -> Result<EstimatorFit> {
    check_problem(a, y)?;
    let x: Vec<f64> = if a.is_identity() {
        y.to_vec()
    } else {
        let svd = a.data.clone().svd(true, true);
        let tol = 1e-12 * svd.singular_values.max().max(1.0) * (a.n().max(a.p()) as f64);
        let sol = svd
            .solve(&DVector::from_column_slice(y), tol)
            .map_err(|e| Error::Numeric(alloc::format!("least squares: {e}")))?;
        sol.as_slice().to_vec()
    };
    let obj = objective_value(&a.data, y, &x, 0.0, 0.0);
    Ok(EstimatorFit::exact(x, obj, 0.0, 0.0))
}

/// Least-squares fit of a constant vector `c·1`, `c = 1ᵀAᵀy / ‖A1‖²`.
///
/// Returns `c = 0` when `A1 = 0` (every constant fits equally well).
pub fn constant_fit(a: &DesignMatrix, y: &[f64]) -> Result<f64> {
    check_problem(a, y)?;
    let col_sum: DVector<f64> = a.data.column_sum();
    let denom = col_sum.norm_squared();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(col_sum.iter().zip(y).map(|(s, v)| s * v).sum::<f64>() / denom)
}

/// Smallest `λ₂` for which [`fused_lasso`] returns a constant vector.
///
/// At the constant fit `c·1`, optimality requires `r + Dᵀw = 0` for the
/// gradient `r = 2Aᵀ(Ac1 - y)` and some `‖w‖∞ ≤ λ₂`; the unique such `w` is
/// the negated running sum of `r`, so `λ_max = max_j |Σ_{k≤j} r_k|`.
pub fn lambda_max(a: &DesignMatrix, y: &[f64]) -> Result<f64> {
    let c = constant_fit(a, y)?;
    let fitted = a.data.column_sum() * c;
    let resid: DVector<f64> = fitted - DVector::from_column_slice(y);
    let grad = a.data.tr_mul(&resid) * 2.0;
    let mut run = 0.0;
    let mut best: f64 = 0.0;
    for g in grad.iter().take(a.p().saturating_sub(1)) {
        run += g;
        best = best.max(run.abs());
    }
    Ok(best)
}

/// `count` log-spaced values from `top` down to `top * min_ratio`.
pub fn lambda_grid(top: f64, count: usize, min_ratio: f64) -> Result<Vec<f64>> {
    if !(top > 0.0 && top.is_finite()) {
        return Err(Error::param(
            "lambda grid needs a positive, finite top value",
        ));
    }
    if count == 0 || !(min_ratio > 0.0 && min_ratio <= 1.0) {
        return Err(Error::param(
            "lambda grid needs count >= 1 and 0 < min_ratio <= 1",
        ));
    }
    if count == 1 {
        return Ok(vec![top]);
    }
    let step = min_ratio.ln() / (count - 1) as f64;
    Ok((0..count).map(|k| top * (step * k as f64).exp()).collect())
}

/// Explicit optimality certificate for a candidate minimiser.
#[derive(Clone, Debug, PartialEq)]
pub struct KktCertificate {
    /// Subgradient of `‖x‖₁` used (all zeros when `λ₁ = 0`).
    pub g1: Vec<f64>,
    /// Subgradient of `‖Dx‖₁` used.
    pub g2: Vec<f64>,
    /// `‖2Aᵀ(Ax - y) + λ₁g₁ + λ₂Dᵀg₂‖∞`.
    pub residual: f64,
    /// Scale `1 + ‖2Aᵀy‖∞` for relative comparisons.
    pub scale: f64,
}

/// Builds subgradients of both penalties at `x` and reports the stationarity
/// residual they leave.
///
/// Works block by block on the maximal constant runs of `x` (jumps and
/// nonzeros detected with [`DEFAULT_CP_TOL`]). Across a jump the `D`
/// subgradient is the jump's sign; inside a run it is obtained by a running
/// sum of the stationarity equations; on a zero block the ℓ₁ subgradient is
/// the constant that balances the block. Entries are then clipped to
/// `[-1, 1]`, so the returned pair is always a valid subgradient and any
/// mismatch shows up in `residual`. Independent of how `x` was computed.
pub fn kkt_certificate(
    a: &DMatrix<f64>,
    y: &[f64],
    x: &[f64],
    lambda1: f64,
    lambda2: f64,
) -> KktCertificate {
    let p = x.len();
    let resid = a * DVector::from_column_slice(x) - DVector::from_column_slice(y);
    let grad: Vec<f64> = (a.tr_mul(&resid) * 2.0).as_slice().to_vec();
    let scale = 1.0 + (a.tr_mul(&DVector::from_column_slice(y)) * 2.0).amax();

    let jumps = change_points_tol(x, DEFAULT_CP_TOL);
    let mut bounds = vec![0usize];
    bounds.extend(jumps.iter().copied());
    bounds.push(p);

    let mut g1 = vec![0.0; p];
    // w = λ₂ g₂ (length p - 1); fixed at jumps, free inside blocks.
    let mut w = vec![0.0; p.saturating_sub(1)];
    for &j in &jumps {
        w[j - 1] = lambda2 * (x[j - 1] - x[j]).signum();
    }
    let mut reach = vec![(0.0, 0.0); p];
    for blk in bounds.windows(2) {
        let (l, r) = (blk[0], blk[1]);
        let left = if l == 0 { 0.0 } else { w[l - 1] };
        let right = if r == p { 0.0 } else { w[r - 1] };
        // Admissible range of λ₁g₁ on this block.
        let (g_lo, g_hi) = if lambda1 == 0.0 {
            (0.0, 0.0)
        } else if x[l].abs() > DEFAULT_CP_TOL {
            let s = lambda1 * x[l].signum();
            (s, s)
        } else {
            (-lambda1, lambda1)
        };
        // Stationarity at j: grad_j + λ₁g1_j + w_j - w_{j-1} = 0. Forward pass
        // keeps the interval of reachable w_j, backward pass picks a path.
        let (mut lo, mut hi) = (left, left);
        for j in l..r - 1 {
            lo = (lo - grad[j] - g_hi).max(-lambda2);
            hi = (hi - grad[j] - g_lo).min(lambda2);
            if lo > hi {
                let m = 0.5 * (lo + hi);
                lo = m;
                hi = m;
            }
            reach[j] = (lo, hi);
        }
        let mut next = right;
        for j in (l..r).rev() {
            let prev = if j == l {
                left
            } else {
                let (lo, hi) = reach[j - 1];
                (next + grad[j] + g_lo)
                    .max(lo)
                    .min((next + grad[j] + g_hi).max(lo).min(hi))
            };
            let g = (prev - next - grad[j]).clamp(g_lo, g_hi);
            g1[j] = if lambda1 > 0.0 { g / lambda1 } else { 0.0 };
            if j > l {
                w[j - 1] = prev;
            }
            next = prev;
        }
    }

    let g2: Vec<f64> = if lambda2 > 0.0 {
        w.iter().map(|v| v / lambda2).collect()
    } else {
        w.clone()
    };
    let mut stationarity = grad.clone();
    for j in 0..p {
        stationarity[j] += lambda1 * g1[j];
        if j < p - 1 {
            stationarity[j] += w[j];
        }
        if j > 0 {
            stationarity[j] -= w[j - 1];
        }
    }
    let residual = stationarity
        .iter()
        .fold(0.0, |acc: f64, v| acc.max(v.abs()));
    KktCertificate {
        g1,
        g2,
        residual,
        scale,
    }
}
