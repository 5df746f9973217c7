// SPDX-License-Identifier: MIT OR Apache-2.0

//! ADMM for `‖y - Ax‖² + λ₁‖x‖₁ + λ₂‖Dx‖₁` with a general dense design.
//!
//! The penalty operator is stacked as `F = [I; D]` and split as `z = Fx`, so
//! the `z`-step is a separable soft threshold and the `x`-step solves
//! `(2AᵀA + ρ(I + DᵀD)) x = 2Aᵀy + ρFᵀ(z - u)`. That matrix is positive
//! definite for every design, is factorised once per `ρ` on first use, and
//! the factor is reused across iterations and across calls on the same
//! design.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
#[allow(unused_imports)] // unused when std is linked
use num_traits::Float;

use super::{active, objective_value, EstimatorFit, SolverConfig};
use crate::signal::total_variation;
use crate::{Error, Result};

/// Over-relaxation factor for the `z`- and `u`-steps.
const RELAXATION: f64 = 1.6;
/// Residual-balancing trigger: rescale ρ when one residual exceeds the other
/// by this factor.
const BALANCE_RATIO: f64 = 10.0;
const BALANCE_EVERY: usize = 10;
const MAX_RHO_CHANGES: usize = 40;

#[derive(Clone, Debug)]
struct State {
    x: Vec<f64>,
    z: Vec<f64>,
    u: Vec<f64>,
}

/// Reusable ADMM solver bound to one `(A, y)` pair.
///
/// Successive [`AdmmSolver::solve`] calls warm-start from the previous
/// primal/dual iterate and keep the adapted `ρ` and its factorisation, which
/// is what makes decreasing λ grids cheap.
pub struct AdmmSolver<'a> {
    a: &'a DMatrix<f64>,
    y: Vec<f64>,
    gram2: DMatrix<f64>,
    aty2: DVector<f64>,
    cfg: SolverConfig,
    rho: f64,
    chol: Option<Cholesky<f64, Dyn>>,
    state: Option<State>,
}

impl<'a> AdmmSolver<'a> {
    pub fn new(a: &'a DMatrix<f64>, y: &'a [f64], cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        if a.nrows() != y.len() {
            return Err(Error::dim(alloc::format!(
                "design has {} rows but response has length {}",
                a.nrows(),
                y.len()
            )));
        }
        let p = a.ncols();
        if p == 0 {
            return Err(Error::dim("design has no columns"));
        }
        let gram2 = a.tr_mul(a) * 2.0;
        let aty2 = a.tr_mul(&DVector::from_column_slice(y)) * 2.0;
        let state = match &cfg.warm_start {
            Some(x0) => {
                if x0.len() != p {
                    return Err(Error::dim("warm start length differs from p"));
                }
                Some(State {
                    z: stack(x0),
                    u: vec![0.0; 2 * p - 1],
                    x: x0.clone(),
                })
            }
            None => None,
        };
        Ok(Self {
            a,
            y: y.to_vec(),
            gram2,
            aty2,
            cfg: cfg.clone(),
            rho: cfg.admm_rho,
            chol: None,
            state,
        })
    }

    /// Swaps in a new response for the same design and drops the warm start.
    pub fn set_response(&mut self, y: &[f64]) -> Result<()> {
        if y.len() != self.a.nrows() {
            return Err(Error::dim(alloc::format!(
                "design has {} rows but response has length {}",
                self.a.nrows(),
                y.len()
            )));
        }
        self.y.clear();
        self.y.extend_from_slice(y);
        self.aty2 = self.a.tr_mul(&DVector::from_column_slice(y)) * 2.0;
        self.state = None;
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.a.ncols()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    fn set_rho(&mut self, rho: f64) -> Result<()> {
        self.chol = Some(factor(&self.gram2, rho)?);
        self.rho = rho;
        Ok(())
    }

    /// Solves for one `(λ₁, λ₂)` pair, warm-starting from the previous call.
    ///
    /// Pure fused-lasso problems (`λ₁ = 0`) are first handed to an exact
    /// active-set method; ADMM iterations run when that is not applicable
    /// or fails.
    pub fn solve(&mut self, lambda1: f64, lambda2: f64) -> Result<EstimatorFit> {
        if !(lambda1 >= 0.0 && lambda2 >= 0.0) {
            return Err(Error::param("penalties must be nonnegative"));
        }
        if lambda1 == 0.0 && lambda2 > 0.0 {
            let p = self.p();
            let start = self
                .state
                .as_ref()
                .map_or_else(|| vec![0.0; p], |s| s.x.clone());
            if let Some(out) =
                active::solve(&self.gram2, &self.aty2, lambda2, &start, self.cfg.max_iters)
            {
                let x = out.x;
                let objective = objective_value(self.a, &self.y, &x, lambda1, lambda2);
                self.state = Some(State {
                    z: stack(&x),
                    u: vec![0.0; 2 * p - 1],
                    x: x.clone(),
                });
                return Ok(EstimatorFit {
                    achieved_tv: total_variation(&x),
                    achieved_l1: x.iter().map(|v| v.abs()).sum(),
                    coefficients: x,
                    objective,
                    iterations: out.iterations,
                    converged: true,
                    lambda1,
                    lambda2,
                });
            }
        }
        self.solve_admm(lambda1, lambda2)
    }

    /// Runs ADMM iterations only, warm-starting from the previous call.
    pub fn solve_admm(&mut self, lambda1: f64, lambda2: f64) -> Result<EstimatorFit> {
        if !(lambda1 >= 0.0 && lambda2 >= 0.0) {
            return Err(Error::param("penalties must be nonnegative"));
        }
        let p = self.p();
        let m = 2 * p - 1;
        let mut st = self.state.take().unwrap_or_else(|| State {
            x: vec![0.0; p],
            z: vec![0.0; m],
            u: vec![0.0; m],
        });
        let start_x = st.x.clone();
        let start_obj = objective_value(self.a, &self.y, &start_x, lambda1, lambda2);
        if self.chol.is_none() {
            self.set_rho(self.rho)?;
        }

        let sqrt_m = (m as f64).sqrt();
        let sqrt_p = (p as f64).sqrt();
        let mut rhs = DVector::zeros(p);
        let mut fx = vec![0.0; m];
        let mut z_old = vec![0.0; m];
        let mut w = vec![0.0; m];
        let mut ft = vec![0.0; p];
        let mut converged = false;
        let mut iterations = 0;
        let mut rho_changes = 0;

        for it in 1..=self.cfg.max_iters {
            iterations = it;
            let rho = self.rho;
            // x-step
            for k in 0..m {
                w[k] = st.z[k] - st.u[k];
            }
            stack_transpose(&w, &mut ft);
            for j in 0..p {
                rhs[j] = self.aty2[j] + rho * ft[j];
            }
            self.chol
                .as_ref()
                .expect("factorised above")
                .solve_mut(&mut rhs);
            st.x.copy_from_slice(rhs.as_slice());

            // z-step with over-relaxation
            stack_into(&st.x, &mut fx);
            z_old.copy_from_slice(&st.z);
            let (k1, k2) = (lambda1 / rho, lambda2 / rho);
            for k in 0..m {
                let relaxed = RELAXATION * fx[k] + (1.0 - RELAXATION) * z_old[k];
                let v = relaxed + st.u[k];
                st.z[k] = soft(v, if k < p { k1 } else { k2 });
                st.u[k] = v - st.z[k];
            }

            // residuals
            let mut r2 = 0.0;
            let mut fx2 = 0.0;
            let mut z2 = 0.0;
            for k in 0..m {
                let d = fx[k] - st.z[k];
                r2 += d * d;
                fx2 += fx[k] * fx[k];
                z2 += st.z[k] * st.z[k];
                w[k] = st.z[k] - z_old[k];
            }
            stack_transpose(&w, &mut ft);
            let s = rho * norm(&ft);
            stack_transpose(&st.u, &mut ft);
            let dual_scale = rho * norm(&ft);
            let r = r2.sqrt();
            let eps_pri = sqrt_m * self.cfg.abs_tol + self.cfg.rel_tol * fx2.sqrt().max(z2.sqrt());
            let eps_dual = sqrt_p * self.cfg.abs_tol + self.cfg.rel_tol * dual_scale;
            if r <= eps_pri && s <= eps_dual {
                converged = true;
                break;
            }

            if it % BALANCE_EVERY == 0 && rho_changes < MAX_RHO_CHANGES {
                let factor = if r > BALANCE_RATIO * s {
                    2.0
                } else if s > BALANCE_RATIO * r {
                    0.5
                } else {
                    1.0
                };
                if factor != 1.0 {
                    self.set_rho(rho * factor)?;
                    for v in &mut st.u {
                        *v /= factor;
                    }
                    rho_changes += 1;
                }
            }
        }

        let mut x = st.x.clone();
        if let Some(polished) = self.polish(&st.z, &x, lambda1, lambda2) {
            x = polished;
        }
        let mut objective = objective_value(self.a, &self.y, &x, lambda1, lambda2);
        if objective > start_obj {
            x = start_x;
            objective = start_obj;
        }
        self.state = Some(st);

        Ok(EstimatorFit {
            achieved_tv: total_variation(&x),
            achieved_l1: x.iter().map(|v| v.abs()).sum(),
            coefficients: x,
            objective,
            iterations,
            converged,
            lambda1,
            lambda2,
        })
    }

    /// Re-solves exactly on a support pattern read off the iterate.
    ///
    /// Coordinates fused by `z` are merged into blocks, blocks zeroed by the
    /// ℓ₁ part are pinned at zero, and the signs of the remaining penalty
    /// terms are frozen, which turns the problem into a small linear system.
    /// Besides the exact zeros of `z`, patterns are read off `x` at a ladder
    /// of relative tolerances. A candidate must reproduce its frozen signs;
    /// the one with the lowest objective wins if it does not increase the
    /// objective.
    fn polish(&self, z: &[f64], x: &[f64], lambda1: f64, lambda2: f64) -> Option<Vec<f64>> {
        let p = self.p();
        let (z1, z2) = z.split_at(p);
        let mut best_obj = objective_value(self.a, &self.y, x, lambda1, lambda2);
        let slack = 1e-12 * best_obj.abs().max(1.0);
        let mut best = None;
        let mut consider = |out: Option<Vec<f64>>| {
            if let Some(out) = out {
                let f = objective_value(self.a, &self.y, &out, lambda1, lambda2);
                if f <= best_obj + slack {
                    best_obj = f.min(best_obj);
                    best = Some(out);
                }
            }
        };
        consider(self.polish_pattern(z1, z2, lambda1, lambda2));
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        for rel in [1e-6, 1e-5, 1e-4, 1e-3, 1e-2] {
            let tol = rel * scale;
            let fx1: Vec<f64> = x
                .iter()
                .map(|&v| if v.abs() <= tol { 0.0 } else { v })
                .collect();
            let fx2: Vec<f64> = x
                .windows(2)
                .map(|w| {
                    if (w[0] - w[1]).abs() <= tol {
                        0.0
                    } else {
                        w[0] - w[1]
                    }
                })
                .collect();
            consider(self.polish_pattern(&fx1, &fx2, lambda1, lambda2));
        }
        best
    }

    fn polish_pattern(
        &self,
        z1: &[f64],
        z2: &[f64],
        lambda1: f64,
        lambda2: f64,
    ) -> Option<Vec<f64>> {
        let p = self.p();
        let mut blocks: Vec<(usize, usize)> = Vec::new();
        let mut start = 0;
        for b in 0..p.saturating_sub(1) {
            if z2[b] != 0.0 {
                blocks.push((start, b + 1));
                start = b + 1;
            }
        }
        blocks.push((start, p));

        let nb = blocks.len();
        let mut zero = vec![false; nb];
        let mut sign1 = vec![0.0; nb];
        for (k, &(l, r)) in blocks.iter().enumerate() {
            if lambda1 > 0.0 {
                let s: f64 = z1[l..r].iter().sum();
                zero[k] = z1[l..r].iter().all(|&v| v == 0.0);
                sign1[k] = s.signum();
            }
        }
        let boundary_sign: Vec<f64> = blocks[..nb - 1]
            .iter()
            .map(|&(_, r)| z2[r - 1].signum())
            .collect();

        let free: Vec<usize> = (0..nb).filter(|&k| !zero[k]).collect();
        let mut level = vec![0.0; nb];
        if !free.is_empty() {
            let n = self.a.nrows();
            let mut merged = DMatrix::zeros(n, free.len());
            for (c, &k) in free.iter().enumerate() {
                let (l, r) = blocks[k];
                for j in l..r {
                    merged.column_mut(c).axpy(1.0, &self.a.column(j), 1.0);
                }
            }
            let mut rhs = merged.tr_mul(&DVector::from_column_slice(&self.y));
            for (c, &k) in free.iter().enumerate() {
                let (l, r) = blocks[k];
                let mut lin = lambda1 * (r - l) as f64 * sign1[k];
                if k + 1 < nb {
                    lin += lambda2 * boundary_sign[k];
                }
                if k > 0 {
                    lin -= lambda2 * boundary_sign[k - 1];
                }
                rhs[c] -= 0.5 * lin;
            }
            let gram = merged.tr_mul(&merged);
            let beta = gram.cholesky()?.solve(&rhs);
            for (c, &k) in free.iter().enumerate() {
                level[k] = beta[c];
            }
        }
        if lambda1 > 0.0
            && free
                .iter()
                .any(|&k| level[k] == 0.0 || level[k].signum() != sign1[k])
        {
            return None;
        }
        if lambda2 > 0.0 {
            for k in 0..nb - 1 {
                let jump = level[k] - level[k + 1];
                if jump == 0.0 || jump.signum() != boundary_sign[k] {
                    return None;
                }
            }
        }
        let mut out = vec![0.0; p];
        for (k, &(l, r)) in blocks.iter().enumerate() {
            out[l..r].fill(level[k]);
        }
        Some(out)
    }
}

fn factor(gram2: &DMatrix<f64>, rho: f64) -> Result<Cholesky<f64, Dyn>> {
    let p = gram2.nrows();
    let mut m = gram2.clone();
    // ρ(I + DᵀD): DᵀD is tridiagonal with diagonal (1, 2, ..., 2, 1).
    for j in 0..p {
        let d = if p == 1 {
            0.0
        } else if j == 0 || j == p - 1 {
            1.0
        } else {
            2.0
        };
        m[(j, j)] += rho * (1.0 + d);
        if j + 1 < p {
            m[(j, j + 1)] -= rho;
            m[(j + 1, j)] -= rho;
        }
    }
    m.cholesky().ok_or_else(|| {
        Error::Numeric(alloc::format!(
            "ADMM system not positive definite at rho = {rho}"
        ))
    })
}

#[inline]
fn soft(v: f64, k: f64) -> f64 {
    if v > k {
        v - k
    } else if v < -k {
        v + k
    } else {
        0.0
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn stack(x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; 2 * x.len() - 1];
    stack_into(x, &mut out);
    out
}

/// `Fx = [x; Dx]`.
fn stack_into(x: &[f64], out: &mut [f64]) {
    let p = x.len();
    out[..p].copy_from_slice(x);
    for j in 0..p - 1 {
        out[p + j] = x[j] - x[j + 1];
    }
}

/// `Fᵀw = w₁ + Dᵀw₂`.
fn stack_transpose(w: &[f64], out: &mut [f64]) {
    let p = out.len();
    out.copy_from_slice(&w[..p]);
    let w2 = &w[p..];
    for j in 0..p - 1 {
        out[j] += w2[j];
        out[j + 1] -= w2[j];
    }
}
