// SPDX-License-Identifier: MIT OR Apache-2.0

//! TV-constrained least squares via bisection on the penalised path.

use alloc::vec;

#[allow(unused_imports)] // unused when std is linked
use num_traits::Float;

use super::{
    constant_fit, lambda_max, least_squares, objective_value, prox_tv_1d, AdmmSolver, EstimatorFit,
    SolverConfig,
};
use crate::design::DesignMatrix;
use crate::error::BracketStep;
use crate::{Error, Result};

const MAX_STEPS: usize = 200;

/// `argmin ‖y - Ax‖²` subject to `‖Dx‖₁ ≤ V`.
///
/// The achieved TV of the penalised fit is non-increasing in `λ₂`, so the
/// constraint is met by bisecting `λ₂` on a log scale between a value whose
/// fit violates the budget and `λ_max` (constant fit). Stops when the
/// achieved TV is within `tv_tol = 1e-4·max(1, V)` of `V`; the returned fit
/// always satisfies `achieved_tv ≤ V + tv_tol`. An inactive constraint
/// returns the least-squares fit with `λ₂ = 0`; `V = 0` returns the
/// least-squares constant.
pub fn constrained_fused_lasso(
    a: &DesignMatrix,
    y: &[f64],
    budget: f64,
    cfg: &SolverConfig,
) -> Result<EstimatorFit> {
    if !(budget >= 0.0) || !budget.is_finite() {
        return Err(Error::param("TV budget V must be finite and nonnegative"));
    }
    let tv_tol = 1e-4 * budget.max(1.0);

    let unpenalised = least_squares(a, y)?;
    if unpenalised.achieved_tv <= budget + tv_tol {
        return Ok(unpenalised);
    }
    let top = lambda_max(a, y)?;
    if budget == 0.0 {
        let c = constant_fit(a, y)?;
        let x = vec![c; a.p()];
        let obj = objective_value(&a.data, y, &x, 0.0, 0.0);
        return Ok(EstimatorFit::exact(x, obj, 0.0, top));
    }

    let mut admm = if a.is_identity() {
        None
    } else {
        Some(AdmmSolver::new(&a.data, y, cfg)?)
    };
    let mut eval = |lambda: f64| -> Result<EstimatorFit> {
        match admm.as_mut() {
            Some(s) => s.solve(0.0, lambda),
            None => {
                let x = prox_tv_1d(y, lambda);
                let obj = objective_value(&a.data, y, &x, 0.0, lambda);
                Ok(EstimatorFit::exact(x, obj, 0.0, lambda))
            }
        }
    };

    let mut trace = vec![BracketStep {
        lambda: 0.0,
        achieved_tv: unpenalised.achieved_tv,
    }];
    let mut hi = top;
    let mut hi_fit = eval(hi)?;
    trace.push(BracketStep {
        lambda: hi,
        achieved_tv: hi_fit.achieved_tv,
    });
    let mut lo_tv = unpenalised.achieved_tv;

    // Walk down from λ_max until the budget is violated.
    let mut lo = hi;
    loop {
        lo *= 0.5;
        let fit = eval(lo)?;
        trace.push(BracketStep {
            lambda: lo,
            achieved_tv: fit.achieved_tv,
        });
        if fit.achieved_tv > lo_tv + tv_tol || fit.achieved_tv < hi_fit.achieved_tv - tv_tol {
            return Err(Error::Bisection { trace });
        }
        if (fit.achieved_tv - budget).abs() <= tv_tol {
            return Ok(fit);
        }
        if fit.achieved_tv > budget {
            lo_tv = fit.achieved_tv;
            break;
        }
        hi = lo;
        hi_fit = fit;
        if trace.len() > MAX_STEPS {
            return Err(Error::Bisection { trace });
        }
    }

    for _ in 0..MAX_STEPS {
        if hi / lo - 1.0 < 1e-12 {
            break;
        }
        let mid = (lo * hi).sqrt();
        let fit = eval(mid)?;
        trace.push(BracketStep {
            lambda: mid,
            achieved_tv: fit.achieved_tv,
        });
        if fit.achieved_tv > lo_tv + tv_tol || fit.achieved_tv < hi_fit.achieved_tv - tv_tol {
            return Err(Error::Bisection { trace });
        }
        if (fit.achieved_tv - budget).abs() <= tv_tol {
            return Ok(fit);
        }
        if fit.achieved_tv > budget {
            lo = mid;
            lo_tv = fit.achieved_tv;
        } else {
            hi = mid;
            hi_fit = fit;
        }
    }
    if hi_fit.achieved_tv <= budget + tv_tol {
        Ok(hi_fit)
    } else {
        Err(Error::Bisection { trace })
    }
}
