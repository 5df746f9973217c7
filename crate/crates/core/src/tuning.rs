// SPDX-License-Identifier: MIT OR Apache-2.0

//! Practical tuning: K-fold cross-validation over a λ grid, the default
//! bandwidth and gap, and a permutation threshold for the mean filter.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DVector;
#[allow(unused_imports)] // unused when std is linked
use num_traits::Float;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::postprocess::{
    localise, prefix_sums, stat_from_prefix, ChangePointReport, FilterConfig,
};
use crate::seed::{self, purpose};
use crate::signal::{change_points_tol, DEFAULT_CP_TOL};
use crate::solver::{prox_tv_1d, prox_tv_observed, AdmmSolver, SolverConfig};
use crate::{Error, Result};

/// `⌊0.25 (ln p)²⌋`, clamped to `[1, ⌊(p - 1)/2⌋]`.
pub fn default_bandwidth(p: usize) -> Result<usize> {
    if p < 8 {
        return Err(Error::param(format!(
            "default bandwidth needs p >= 8, got {p}"
        )));
    }
    let l = (p as f64).ln();
    let b = (0.25 * l * l).floor() as usize;
    Ok(b.clamp(1, (p - 1) / 2))
}

/// Twice the default bandwidth.
pub fn default_gap(p: usize) -> Result<usize> {
    Ok(2 * default_bandwidth(p)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CvEstimator {
    Fused,
    /// `λ₁ = ratio·λ₂` along the grid.
    Sparse {
        ratio: f64,
    },
}

/// `sqrt(max_j var(A_j))`, the λ₁/λ₂ ratio used for the sparse estimator.
pub fn sparse_ratio(a: &DesignMatrix) -> f64 {
    let n = a.n();
    if n < 2 {
        return 1.0;
    }
    let mut best: f64 = 0.0;
    for col in a.data.column_iter() {
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        best = best.max(var);
    }
    best.sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvPoint {
    pub lambda1: f64,
    pub lambda2: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    /// One entry per grid value, ordered by decreasing λ₂.
    pub curve: Vec<CvPoint>,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Fold fits that stopped at `max_iters`.
    pub unconverged: usize,
}

/// Balanced random partition of `0..n` into `k` folds, each sorted.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::param("cross-validation needs at least 2 folds"));
    }
    if k > n {
        return Err(Error::param(format!("{k} folds but only {n} observations")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng_for(seed, &[purpose::FOLDS]));
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, &i) in idx.iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// K-fold cross-validation of the penalised estimator over `grid` (values
/// of λ₂). Returns the mean held-out squared error per grid point and the
/// minimiser, ties going to the larger λ.
pub fn cross_validate(
    a: &DesignMatrix,
    y: &[f64],
    grid: &[f64],
    folds: usize,
    estimator: CvEstimator,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<CvResult> {
    if a.n() != y.len() {
        return Err(Error::dim(format!(
            "design has {} rows but response has length {}",
            a.n(),
            y.len()
        )));
    }
    if grid.is_empty() || grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::param(
            "lambda grid must be nonempty and strictly positive",
        ));
    }
    let ratio = match estimator {
        CvEstimator::Fused => 0.0,
        CvEstimator::Sparse { ratio } => {
            if !(ratio >= 0.0 && ratio.is_finite()) {
                return Err(Error::param("sparse ratio must be finite and nonnegative"));
            }
            ratio
        }
    };
    let mut lambdas = grid.to_vec();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    lambdas.dedup();

    let n = a.n();
    let p = a.p();
    let parts = make_folds(n, folds, seed)?;
    let mut sum_err = vec![0.0; lambdas.len()];
    let mut unconverged = 0;
    let mut in_test = vec![false; n];

    for test in &parts {
        in_test.iter_mut().for_each(|v| *v = false);
        test.iter().for_each(|&i| in_test[i] = true);
        let train: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
        let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let m = test.len() as f64;

        if a.is_identity() && ratio == 0.0 {
            // Training rows of the identity observe coordinates directly.
            for (k, &lam) in lambdas.iter().enumerate() {
                let x = prox_tv_observed(&train, &y_train, p, lam);
                sum_err[k] += test.iter().map(|&i| (y[i] - x[i]).powi(2)).sum::<f64>() / m;
            }
            continue;
        }

        let a_train = a.data.select_rows(train.iter());
        let a_test = a.data.select_rows(test.iter());
        let y_test = DVector::from_iterator(test.len(), test.iter().map(|&i| y[i]));
        let mut solver = AdmmSolver::new(&a_train, &y_train, cfg)?;
        for (k, &lam) in lambdas.iter().enumerate() {
            let fit = solver.solve(ratio * lam, lam)?;
            if !fit.converged {
                unconverged += 1;
            }
            let pred = &a_test * DVector::from_column_slice(&fit.coefficients);
            sum_err[k] += (&y_test - pred).norm_squared() / m;
        }
    }

    let k = folds as f64;
    let curve: Vec<CvPoint> = lambdas
        .iter()
        .zip(&sum_err)
        .map(|(&l, &e)| CvPoint {
            lambda1: ratio * l,
            lambda2: l,
            error: e / k,
        })
        .collect();
    let mut best = 0;
    for (i, pt) in curve.iter().enumerate() {
        if pt.error < curve[best].error {
            best = i;
        }
    }
    Ok(CvResult {
        lambda1: curve[best].lambda1,
        lambda2: curve[best].lambda2,
        curve,
        unconverged,
    })
}

/// Where the permutation threshold's null distribution comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermutationNull {
    /// Refit to shuffled residuals `y - Ax̂`; see [`residual_permutation_tau`].
    #[default]
    Residuals,
    /// Shuffle the entries of x̂; see [`permutation_tau`].
    Coefficients,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermutationTau {
    pub tau: f64,
    /// The fit has no change points, so there is nothing to threshold.
    pub no_signal: bool,
    /// `max_i |F_i|` of each permuted replicate, in replicate order.
    pub statistics: Vec<f64>,
}

/// The data a fit came from, for thresholds that refit under a null.
#[derive(Clone, Copy, Debug)]
pub struct RefitData<'a> {
    pub a: &'a DesignMatrix,
    pub y: &'a [f64],
    pub lambda2: f64,
    pub solver: &'a SolverConfig,
}

fn check_permutation_args(p: usize, b: usize, permutations: usize, alpha: f64) -> Result<()> {
    if permutations == 0 {
        return Err(Error::param("need at least one permutation"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if b == 0 || 2 * b > p {
        return Err(Error::param(format!(
            "bandwidth must satisfy 1 <= b and 2b <= p, got b = {b}, p = {p}"
        )));
    }
    Ok(())
}

fn max_filter_stat(x: &[f64], b: usize) -> f64 {
    let s = prefix_sums(x);
    (b..=x.len() - b)
        .map(|i| stat_from_prefix(&s, i, b).abs())
        .fold(0.0, f64::max)
}

/// Smallest statistic whose empirical CDF reaches `1 - α`.
fn upper_quantile(statistics: &[f64], alpha: f64) -> f64 {
    let mut sorted = statistics.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (((1.0 - alpha) * sorted.len() as f64) - 1e-9)
        .ceil()
        .max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

/// Empirical `(1 - α)` quantile of `max_{b ≤ i ≤ p-b} |F_i|` over `permutations`
/// random shuffles of the fitted coefficients.
///
/// The quantile is the smallest statistic whose empirical CDF reaches
/// `1 - α`. Replicate `k` draws its shuffle from its own stream, so the result
/// does not depend on evaluation order.
pub fn permutation_tau(
    x: &[f64],
    b: usize,
    permutations: usize,
    alpha: f64,
    seed: u64,
) -> Result<PermutationTau> {
    check_permutation_args(x.len(), b, permutations, alpha)?;
    if change_points_tol(x, DEFAULT_CP_TOL).is_empty() {
        return Ok(PermutationTau {
            tau: 0.0,
            no_signal: true,
            statistics: Vec::new(),
        });
    }
    let mut work = x.to_vec();
    let statistics: Vec<f64> = (0..permutations as u64)
        .map(|k| {
            work.copy_from_slice(x);
            work.shuffle(&mut seed::rng_for(seed, &[purpose::PERMUTATION, k]));
            max_filter_stat(&work, b)
        })
        .collect();
    let tau = upper_quantile(&statistics, alpha);
    Ok(PermutationTau {
        tau,
        no_signal: false,
        statistics,
    })
}

/// Empirical `(1 - α)` quantile of `max_{b ≤ i ≤ p-b} |F_i|` over fused-lasso
/// fits, at the fit's λ₂, to `permutations` random shuffles of the centred
/// residuals `y - Ax̂`.
///
/// Shuffled residuals keep the noise level of the data but carry no change
/// points, so the statistic measures how large the filter gets on spurious
/// jumps alone. Quantile and seeding follow [`permutation_tau`]. The result is
/// floored at `1e-8` times the range of x̂ so it stays positive for an exact
/// fit.
pub fn residual_permutation_tau(
    x: &[f64],
    data: RefitData<'_>,
    b: usize,
    permutations: usize,
    alpha: f64,
    seed: u64,
) -> Result<PermutationTau> {
    let RefitData {
        a,
        y,
        lambda2,
        solver,
    } = data;
    if a.p() != x.len() || a.n() != y.len() {
        return Err(Error::dim(format!(
            "design is {}x{} but fit has length {} and response {}",
            a.n(),
            a.p(),
            x.len(),
            y.len()
        )));
    }
    if !(lambda2 > 0.0 && lambda2.is_finite()) {
        return Err(Error::param(
            "residual permutation needs a positive lambda2",
        ));
    }
    check_permutation_args(x.len(), b, permutations, alpha)?;
    if change_points_tol(x, DEFAULT_CP_TOL).is_empty() {
        return Ok(PermutationTau {
            tau: 0.0,
            no_signal: true,
            statistics: Vec::new(),
        });
    }
    let fitted = a.mul_vec(x);
    let mut resid: Vec<f64> = y.iter().zip(&fitted).map(|(v, f)| v - f).collect();
    let mean = resid.iter().sum::<f64>() / resid.len() as f64;
    for v in &mut resid {
        *v -= mean;
    }
    let mut admm = if a.is_identity() {
        None
    } else {
        Some(AdmmSolver::new(&a.data, &resid, solver)?)
    };
    let mut work = resid.clone();
    let mut statistics = Vec::with_capacity(permutations);
    for k in 0..permutations as u64 {
        work.copy_from_slice(&resid);
        work.shuffle(&mut seed::rng_for(seed, &[purpose::PERMUTATION, k]));
        let null_fit = match admm.as_mut() {
            None => prox_tv_1d(&work, lambda2),
            Some(s) => {
                s.set_response(&work)?;
                s.solve(0.0, lambda2)?.coefficients
            }
        };
        statistics.push(max_filter_stat(&null_fit, b));
    }
    let range = x.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
        - x.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let tau = upper_quantile(&statistics, alpha).max(1e-8 * range);
    Ok(PermutationTau {
        tau,
        no_signal: false,
        statistics,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BandwidthRule {
    Default,
    Fixed { b: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TauRule {
    Permutation {
        permutations: usize,
        alpha: f64,
        #[serde(default)]
        null: PermutationNull,
    },
    Fixed {
        tau: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GapRule {
    TwiceBandwidth,
    Fixed { t: usize },
}

/// How every tuning parameter of the pipeline is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningPlan {
    /// Explicit λ₂ grid; when absent one is built from `λ_max`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    pub grid_size: usize,
    pub grid_min_ratio: f64,
    pub folds: usize,
    pub bandwidth: BandwidthRule,
    pub tau: TauRule,
    pub gap: GapRule,
    pub seed: u64,
}

impl Default for TuningPlan {
    fn default() -> Self {
        Self {
            lambda_grid: None,
            grid_size: 40,
            grid_min_ratio: 1e-3,
            folds: 5,
            bandwidth: BandwidthRule::Default,
            tau: TauRule::Permutation {
                permutations: 100,
                alpha: 0.05,
                null: PermutationNull::Residuals,
            },
            gap: GapRule::TwiceBandwidth,
            seed: 0,
        }
    }
}

impl TuningPlan {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::param("folds must be at least 2"));
        }
        if let TauRule::Permutation {
            permutations,
            alpha,
            ..
        } = self.tau
        {
            if permutations == 0 || !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::param(
                    "permutation rule needs B >= 1 and 0 < alpha < 1",
                ));
            }
        }
        if let Some(g) = &self.lambda_grid {
            if g.is_empty() || g.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
                return Err(Error::param(
                    "lambda grid must be nonempty and strictly positive",
                ));
            }
        }
        Ok(())
    }

    pub fn bandwidth_for(&self, p: usize) -> Result<usize> {
        match self.bandwidth {
            BandwidthRule::Default => default_bandwidth(p),
            BandwidthRule::Fixed { b } => Ok(b),
        }
    }

    pub fn gap_for(&self, b: usize) -> usize {
        match self.gap {
            GapRule::TwiceBandwidth => 2 * b,
            GapRule::Fixed { t } => t,
        }
    }

    /// Resolves bandwidth, threshold and gap for a fit and runs the filters.
    /// `seed` drives the permutation threshold; the residual null needs
    /// `data`.
    pub fn localise(
        &self,
        x: &[f64],
        data: Option<RefitData<'_>>,
        seed: u64,
    ) -> Result<ChangePointReport> {
        let b = self.bandwidth_for(x.len())?;
        let gap = self.gap_for(b);
        let tau = match self.tau {
            TauRule::Fixed { tau } => tau,
            TauRule::Permutation {
                permutations,
                alpha,
                null,
            } => {
                let perm = match (null, data) {
                    (PermutationNull::Coefficients, _) => {
                        permutation_tau(x, b, permutations, alpha, seed)?
                    }
                    (PermutationNull::Residuals, Some(d)) => {
                        residual_permutation_tau(x, d, b, permutations, alpha, seed)?
                    }
                    (PermutationNull::Residuals, None) => {
                        return Err(Error::param(
                            "the residual permutation null needs the design and response",
                        ));
                    }
                };
                if perm.no_signal {
                    let cfg = FilterConfig {
                        bandwidth: b,
                        tau: 0.0,
                        gap,
                    };
                    return Ok(ChangePointReport::no_signal(Vec::new(), cfg));
                }
                perm.tau
            }
        };
        let cfg = FilterConfig {
            bandwidth: b,
            tau,
            gap,
        };
        if tau == 0.0 {
            // A nonconstant fit can still give a zero threshold when every
            // permuted statistic vanishes; nothing is then distinguishable.
            return Ok(ChangePointReport::no_signal(
                change_points_tol(x, DEFAULT_CP_TOL),
                cfg,
            ));
        }
        localise(x, &cfg)
    }
}
