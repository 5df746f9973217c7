// SPDX-License-Identifier: MIT OR Apache-2.0

//! Estimation and localisation error measures.
//!
//! An empty change-point set is at distance `p` from any nonempty set, and
//! two empty sets are at distance `0`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::postprocess::ChangePointReport;
use crate::{Error, Result};

/// `d(M1 | M2) = max_{m2 ∈ M2} min_{m1 ∈ M1} |m1 - m2|`.
///
/// Both sets must be sorted.
pub fn one_sided(m1: &[usize], m2: &[usize], p: usize) -> f64 {
    match (m1.is_empty(), m2.is_empty()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => p as f64,
        (false, false) => {
            debug_assert!(m1.windows(2).all(|w| w[0] <= w[1]));
            let mut worst = 0;
            let mut k = 0;
            for &b in m2 {
                while k + 1 < m1.len() && m1[k + 1] <= b {
                    k += 1;
                }
                let mut d = m1[k].abs_diff(b);
                if k + 1 < m1.len() {
                    d = d.min(m1[k + 1].abs_diff(b));
                }
                worst = worst.max(d);
            }
            worst as f64
        }
    }
}

pub fn hausdorff(m1: &[usize], m2: &[usize], p: usize) -> f64 {
    one_sided(m1, m2, p).max(one_sided(m2, m1, p))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    /// `‖x̂ - x*‖²`.
    pub coef_sq_error: f64,
    /// `‖x̂ - x*‖² / p`.
    pub coef_mse: f64,
    /// Mean squared prediction error on held-out data, when supplied.
    pub pred_mse: Option<f64>,
    /// `d(Ŝ | S)`: worst distance from a true change point to the estimate.
    pub d_est_given_true: f64,
    /// `d(S | Ŝ)`: worst distance from an estimated change point to the truth.
    pub d_true_given_est: f64,
    pub hausdorff: f64,
    pub num_estimated: usize,
    /// `| |Ŝ| - |S| |`.
    pub count_error: usize,
}

/// Held-out data for prediction error.
#[derive(Clone, Copy, Debug)]
pub struct TestData<'a> {
    pub a: &'a DMatrix<f64>,
    pub y: &'a [f64],
}

/// Evaluates a fit together with an estimated change-point set.
pub fn evaluate_set(
    x_hat: &[f64],
    x_true: &[f64],
    truth: &[usize],
    estimate: &[usize],
    test: Option<TestData<'_>>,
) -> Result<EvalResult> {
    let p = x_true.len();
    if x_hat.len() != p {
        return Err(Error::dim(format!(
            "estimate has length {} but truth has length {p}",
            x_hat.len()
        )));
    }
    let coef_sq_error: f64 = x_hat
        .iter()
        .zip(x_true)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let pred_mse = match test {
        None => None,
        Some(t) => {
            if t.a.ncols() != p || t.a.nrows() != t.y.len() {
                return Err(Error::dim(format!(
                    "test design is {}x{} with {} responses, expected {p} columns",
                    t.a.nrows(),
                    t.a.ncols(),
                    t.y.len()
                )));
            }
            if t.y.is_empty() {
                return Err(Error::dim("test set is empty"));
            }
            let pred = t.a * DVector::from_column_slice(x_hat);
            let sse: f64 = pred.iter().zip(t.y).map(|(f, v)| (v - f) * (v - f)).sum();
            Some(sse / t.y.len() as f64)
        }
    };
    let d_est_given_true = one_sided(estimate, truth, p);
    let d_true_given_est = one_sided(truth, estimate, p);
    Ok(EvalResult {
        coef_sq_error,
        coef_mse: coef_sq_error / p as f64,
        pred_mse,
        d_est_given_true,
        d_true_given_est,
        hausdorff: d_est_given_true.max(d_true_given_est),
        num_estimated: estimate.len(),
        count_error: estimate.len().abs_diff(truth.len()),
    })
}

/// Evaluates against the final (time-filtered) stage of `report`.
pub fn evaluate(
    x_hat: &[f64],
    x_true: &[f64],
    truth: &[usize],
    report: &ChangePointReport,
    test: Option<TestData<'_>>,
) -> Result<EvalResult> {
    evaluate_set(x_hat, x_true, truth, &report.pruned, test)
}

/// Results for the raw fit, the mean-filtered and the time-filtered sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageResults {
    pub fl: EvalResult,
    pub flmf: EvalResult,
    pub flmtf: EvalResult,
}

impl StageResults {
    pub fn stages(&self) -> [(&'static str, &EvalResult); 3] {
        [
            ("FL", &self.fl),
            ("FLMF", &self.flmf),
            ("FLMTF", &self.flmtf),
        ]
    }
}

pub fn evaluate_stages(
    x_hat: &[f64],
    x_true: &[f64],
    truth: &[usize],
    report: &ChangePointReport,
    test: Option<TestData<'_>>,
) -> Result<StageResults> {
    Ok(StageResults {
        fl: evaluate_set(x_hat, x_true, truth, &report.raw, test)?,
        flmf: evaluate_set(x_hat, x_true, truth, &report.filtered, test)?,
        flmtf: evaluate_set(x_hat, x_true, truth, &report.pruned, test)?,
    })
}

/// Straightforward quadratic reference used to cross-check [`one_sided`].
#[doc(hidden)]
pub fn one_sided_naive(m1: &[usize], m2: &[usize], p: usize) -> f64 {
    if m1.is_empty() && m2.is_empty() {
        return 0.0;
    }
    if m1.is_empty() || m2.is_empty() {
        return p as f64;
    }
    let mins: Vec<usize> = m2
        .iter()
        .map(|&b| m1.iter().map(|&a| a.abs_diff(b)).min().unwrap_or(0))
        .collect();
    mins.into_iter().max().unwrap_or(0) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::postprocess::FilterConfig;
    use crate::seed;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn one_sided_examples() {
        assert_eq!(one_sided(&[7], &[7], 100), 0.0);
        assert_eq!(one_sided(&[], &[5], 1000), 1000.0);
        assert_eq!(one_sided(&[5], &[], 1000), 1000.0);
        assert_eq!(one_sided(&[], &[], 1000), 0.0);
        assert_eq!(one_sided(&[10, 90], &[50], 100), 40.0);
        assert_eq!(one_sided(&[50], &[10, 90], 100), 40.0);
        // Asymmetry.
        assert_eq!(one_sided(&[10, 90], &[10], 100), 0.0);
        assert_eq!(one_sided(&[10], &[10, 90], 100), 80.0);
    }

    #[test]
    fn hausdorff_examples() {
        assert_eq!(hausdorff(&[3, 8], &[3, 8], 10), 0.0);
        assert_eq!(hausdorff(&[10], &[20], 100), 10.0);
        assert_eq!(hausdorff(&[], &[], 100), 0.0);
        assert_eq!(hausdorff(&[], &[4], 100), 100.0);
    }

    #[test]
    fn evaluate_examples() {
        let x = vec![0.0, 0.0, 1.0, 1.0];
        let cfg = FilterConfig {
            bandwidth: 1,
            tau: 0.5,
            gap: 2,
        };
        let rep = ChangePointReport {
            raw: vec![2],
            filtered: vec![2],
            pruned: vec![2],
            config: cfg,
            no_signal: false,
        };
        let r = evaluate(&x, &x, &[2], &rep, None).unwrap();
        assert_eq!(r.coef_sq_error, 0.0);
        assert_eq!(r.hausdorff, 0.0);
        assert_eq!(r.count_error, 0);
        assert_eq!(r.pred_mse, None);

        let shifted: Vec<f64> = x.iter().map(|v| v + 0.5).collect();
        let r = evaluate(&shifted, &x, &[2], &rep, None).unwrap();
        assert_eq!(r.coef_sq_error, 4.0 * 0.25);
        assert_eq!(r.coef_mse, 0.25);
        assert_eq!(r.d_est_given_true + r.d_true_given_est, 0.0);

        let eye = DMatrix::identity(4, 4);
        let r = evaluate(
            &x,
            &x,
            &[2],
            &rep,
            Some(TestData {
                a: &eye,
                y: &shifted,
            }),
        )
        .unwrap();
        assert_eq!(r.pred_mse, Some(0.25));

        assert!(evaluate(&x[..3], &x, &[2], &rep, None).is_err());
        let bad = DMatrix::identity(3, 3);
        assert!(evaluate(
            &x,
            &x,
            &[2],
            &rep,
            Some(TestData {
                a: &bad,
                y: &x[..3]
            })
        )
        .is_err());
    }

    #[test]
    fn stages_use_their_own_sets() {
        let x = vec![0.0; 20];
        let cfg = FilterConfig {
            bandwidth: 2,
            tau: 0.5,
            gap: 4,
        };
        let rep = ChangePointReport {
            raw: vec![3, 9, 10],
            filtered: vec![9, 10],
            pruned: vec![9],
            config: cfg,
            no_signal: false,
        };
        let s = evaluate_stages(&x, &x, &[10], &rep, None).unwrap();
        assert_eq!(s.fl.d_true_given_est, 7.0);
        assert_eq!(s.fl.count_error, 2);
        assert_eq!(s.flmf.hausdorff, 1.0);
        assert_eq!(s.flmtf.d_est_given_true, 1.0);
        assert_eq!(s.flmtf.count_error, 0);
    }

    #[test]
    fn evaluate_matches_scalar_loop() {
        let mut rng = seed::rng_for(17, &[]);
        for _ in 0..50 {
            let p = rng.random_range(5..40);
            let x_true: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
            let x_hat: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mut truth: Vec<usize> = (1..p).filter(|_| rng.random_bool(0.2)).collect();
            let mut est: Vec<usize> = (1..p).filter(|_| rng.random_bool(0.2)).collect();
            truth.dedup();
            est.dedup();
            let r = evaluate_set(&x_hat, &x_true, &truth, &est, None).unwrap();
            let mut sq = 0.0;
            for j in 0..p {
                sq += (x_hat[j] - x_true[j]).powi(2);
            }
            assert!((r.coef_sq_error - sq).abs() <= 1e-12);
            assert_eq!(r.d_est_given_true, one_sided_naive(&est, &truth, p));
            assert_eq!(r.d_true_given_est, one_sided_naive(&truth, &est, p));
            assert_eq!(
                r.count_error as i64,
                (est.len() as i64 - truth.len() as i64).abs()
            );
        }
    }

    fn cp_set() -> impl Strategy<Value = Vec<usize>> {
        proptest::collection::btree_set(1usize..200, 1..12).prop_map(|s| s.into_iter().collect())
    }

    proptest! {
        #[test]
        fn one_sided_matches_naive(a in proptest::collection::btree_set(1usize..200, 0..12),
                                   b in proptest::collection::btree_set(1usize..200, 0..12)) {
            let a: Vec<usize> = a.into_iter().collect();
            let b: Vec<usize> = b.into_iter().collect();
            prop_assert_eq!(one_sided(&a, &b, 200), one_sided_naive(&a, &b, 200));
        }

        #[test]
        fn hausdorff_is_a_metric(a in cp_set(), b in cp_set(), c in cp_set()) {
            let p = 200;
            prop_assert_eq!(hausdorff(&a, &b, p), hausdorff(&b, &a, p));
            prop_assert_eq!(hausdorff(&a, &a, p), 0.0);
            if hausdorff(&a, &b, p) == 0.0 {
                prop_assert_eq!(&a, &b);
            }
            prop_assert!(hausdorff(&a, &c, p) <= hausdorff(&a, &b, p) + hausdorff(&b, &c, p));
            prop_assert!(hausdorff(&a, &b, p) <= p as f64);
            prop_assert_eq!(hausdorff(&a, &[], p), p as f64);
        }
    }
}
