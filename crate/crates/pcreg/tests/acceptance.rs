// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p pcreg --test acceptance`.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use pcreg::runner;
use pcreg_core::design::{gaussian_design, identity_design, CovarianceSpec, DesignMatrix};
use pcreg_core::metrics::{hausdorff, one_sided};
use pcreg_core::postprocess::FilterConfig;
use pcreg_core::postprocess::{
    candidate_set, localise, mean_filter, mean_filter_raw, mean_filter_stat, time_filter,
};
use pcreg_core::ric::{empirical_ric, sample_constraint_set};
use pcreg_core::seed::{derive_seed, purpose, rng_for};
use pcreg_core::signal::{change_points, make_signal, total_variation};
use pcreg_core::sim::{aggregate, expand_layout, summarise, Aggregate, CpLayout, Scenario};
use pcreg_core::solver::{
    constrained_fused_lasso, fused_lasso, kkt_certificate, lambda_grid, lambda_max,
    objective_value, prox_tv_1d, sparse_fused_lasso, AdmmSolver, SolverConfig,
};
use pcreg_core::tuning::{
    cross_validate, default_bandwidth, default_gap, permutation_tau, CvEstimator,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

type Check = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sup_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn normals(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Exhaustive search on a `(2k+1)^p` lattice around `start`, recentred on
/// the best point and halved in spacing each round.
fn lattice_min(a: &DMatrix<f64>, y: &[f64], l1: f64, l2: f64, start: &[f64], width: f64) -> f64 {
    let p = start.len();
    let k: i64 = match p {
        1 => 40,
        2 => 12,
        3 => 5,
        _ => 3,
    };
    let side = (2 * k + 1) as usize;
    let mut center = start.to_vec();
    let mut best = objective_value(a, y, &center, l1, l2);
    let mut step = width / k as f64;
    let mut cand = vec![0.0; p];
    for _ in 0..60 {
        let mut best_pt = center.clone();
        for idx in 0..side.pow(p as u32) {
            let mut rem = idx;
            for (c, m) in cand.iter_mut().zip(&center) {
                *c = m + ((rem % side) as i64 - k) as f64 * step;
                rem /= side;
            }
            let f = objective_value(a, y, &cand, l1, l2);
            if f < best {
                best = f;
                best_pt.copy_from_slice(&cand);
            }
        }
        center = best_pt;
        step *= 0.5;
    }
    best
}

fn criterion_1() -> Check {
    let cfg = SolverConfig::default();
    let mut rng = rng_for(101, &[]);
    let mut worst: f64 = 0.0;
    for trial in 0..200 {
        let n = rng.random_range(1..=4);
        let p = rng.random_range(1..=4);
        let a = DesignMatrix::external(DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal)));
        let y = normals(&mut rng, n, 1.5);
        let l2 = rng.random_range(0.05..2.0);
        let l1 = if trial % 2 == 0 {
            0.0
        } else {
            rng.random_range(0.05..2.0)
        };
        let fit = if l1 == 0.0 {
            fused_lasso(&a, &y, l2, &cfg)
        } else {
            sparse_fused_lasso(&a, &y, l1, l2, &cfg)
        }
        .map_err(|e| format!("trial {trial}: {e}"))?;
        // The independent search starts at the origin; a second one refines
        // around the solver's answer in case the first stalls on a kink.
        let width = 2.0 * (1.0 + fit.coefficients.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let from_zero = lattice_min(&a.data, &y, l1, l2, &vec![0.0; p], width);
        let local = lattice_min(&a.data, &y, l1, l2, &fit.coefficients, 1.0);
        let oracle = from_zero.min(local);
        let gap = fit.objective - oracle;
        worst = worst.max(gap.abs());
        ensure(gap.abs() <= 1e-6, || {
            format!(
                "trial {trial} (n={n}, p={p}, l1={l1}, l2={l2}): objective {} vs oracle {oracle}",
                fit.objective
            )
        })?;
    }

    let mut admm_worst: f64 = 0.0;
    for trial in 0..100 {
        let p = rng.random_range(2..=60);
        let eye = DesignMatrix::external(DMatrix::identity(p, p));
        let y = normals(&mut rng, p, 2.0);
        let lam = rng.random_range(0.01..5.0);
        let exact = prox_tv_1d(&y, lam);
        let dispatched = fused_lasso(&eye, &y, lam, &cfg).map_err(|e| e.to_string())?;
        let admm = AdmmSolver::new(&eye.data, &y, &cfg)
            .and_then(|mut s| s.solve_admm(0.0, lam))
            .map_err(|e| e.to_string())?;
        for x in [&dispatched.coefficients, &admm.coefficients] {
            let g = sup_gap(x, &exact);
            admm_worst = admm_worst.max(g);
            ensure(g <= 1e-8, || {
                format!("A = I trial {trial} (p={p}, lam={lam}): sup gap {g:e}")
            })?;
        }
    }
    Ok(format!(
        "lattice worst gap {worst:.1e}; A = I worst sup gap {admm_worst:.1e}"
    ))
}

fn criterion_2() -> Check {
    let mut done = 0;
    let mut check = |ok: bool, what: &str| -> Result<(), String> {
        done += 1;
        ensure(ok, || format!("failed: {what}"))
    };
    let close = |a: &[f64], b: &[f64]| a.len() == b.len() && sup_gap(a, b) <= 1e-9;

    // Signals.
    let nine = expand_layout(CpLayout::NineEqual, 1.0, 1000).map_err(|e| e.to_string())?;
    check(
        (total_variation(&nine.values) - 13.25).abs() <= 1e-9,
        "nine-level TV = 13.25",
    )?;
    check(
        nine.min_jump.is_some_and(|k| (k - 0.75).abs() <= 1e-9),
        "nine-equal min jump = 0.75",
    )?;

    // Solvers.
    let y4 = [0.0, 0.0, 2.0, 2.0];
    let target = [0.125, 0.125, 1.875, 1.875];
    check(
        close(&prox_tv_1d(&y4, 0.5), &target),
        "prox of (0,0,2,2) at 0.5",
    )?;
    let i4 = identity_design(4).map_err(|e| e.to_string())?;
    let cfg = SolverConfig::default();
    let c = constrained_fused_lasso(&i4, &y4, 1.75, &cfg).map_err(|e| e.to_string())?;
    check(
        close(&c.coefficients, &target),
        "constrained V = 1.75 gives the lam = 0.5 solution",
    )?;
    let mut rng = rng_for(202, &[]);
    let a = DesignMatrix::external(DMatrix::from_fn(6, 4, |_, _| rng.sample(StandardNormal)));
    let y = normals(&mut rng, 6, 1.0);
    let ones = DVector::from_element(4, 1.0);
    let a1 = &a.data * &ones;
    let cst = a1.dot(&DVector::from_column_slice(&y)) / a1.norm_squared();
    let big = fused_lasso(&a, &y, 1e6, &cfg).map_err(|e| e.to_string())?;
    check(
        sup_gap(&big.coefficients, &[cst; 4]) <= 1e-9,
        "huge lambda2 gives the least-squares constant",
    )?;
    let a3 = DesignMatrix::external(DMatrix::from_fn(3, 3, |_, _| rng.sample(StandardNormal)));
    let y3 = normals(&mut rng, 3, 1.0);
    let f3 = fused_lasso(&a3, &y3, 0.7, &cfg).map_err(|e| e.to_string())?;
    let o3 = lattice_min(&a3.data, &y3, 0.0, 0.7, &f3.coefficients, 1.0);
    check(
        (f3.objective - o3).abs() <= 1e-6,
        "n = p = 3 lattice oracle",
    )?;
    let a2 = DesignMatrix::external(DMatrix::from_fn(2, 2, |_, _| rng.sample(StandardNormal)));
    let y2 = normals(&mut rng, 2, 1.0);
    let f2 = sparse_fused_lasso(&a2, &y2, 0.4, 0.3, &cfg).map_err(|e| e.to_string())?;
    let o2 = lattice_min(&a2.data, &y2, 0.4, 0.3, &f2.coefficients, 2.0);
    check(
        (f2.objective - o2).abs() <= 1e-6,
        "n = p = 2 sparse lattice oracle",
    )?;

    // Post-processing.
    let c1 = candidate_set(&[4], 2, 8).map_err(|e| e.to_string())?;
    check(c1 == [2, 4, 6], "candidates of {4}, b = 2, p = 8")?;
    let c2 = candidate_set(&[1], 5, 20).map_err(|e| e.to_string())?;
    check(c2 == [5, 6, 15], "candidates of {1}, b = 5, p = 20")?;
    let step = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
    check(
        mean_filter_stat(&step, 4, 2).is_ok_and(|f| (f - 1.0).abs() <= 1e-9),
        "F4 = 1",
    )?;
    check(
        mean_filter_stat(&step, 2, 2).is_ok_and(|f| f.abs() <= 1e-9),
        "F2 = 0",
    )?;
    check(
        mean_filter(&step, 2, 0.5).is_ok_and(|s| s == [4]),
        "mean filter of one step",
    )?;
    let two = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 3.0, 3.0, 3.0, 3.0];
    check(
        mean_filter(&two, 2, 0.5).is_ok_and(|s| s == [4, 8]),
        "mean filter of two steps",
    )?;
    check(
        time_filter(&[10, 12, 50], 5) == [10, 50],
        "time filter {10, 12, 50}, t = 5",
    )?;
    let jump = make_signal(&[500], &[0.0, 1.0], 1000).map_err(|e| e.to_string())?;
    let b = default_bandwidth(1000).map_err(|e| e.to_string())?;
    let tau = permutation_tau(&jump.values, b, 100, 0.05, 3)
        .map_err(|e| e.to_string())?
        .tau;
    let rep = localise(
        &jump.values,
        &FilterConfig {
            bandwidth: b,
            tau,
            gap: 2 * b,
        },
    )
    .map_err(|e| e.to_string())?;
    check(
        rep.pruned == [500],
        "exact jump at 500 survives every stage",
    )?;

    // Tuning.
    check(
        default_bandwidth(1000).ok() == Some(11),
        "bandwidth p = 1000",
    )?;
    check(default_bandwidth(8).ok() == Some(1), "bandwidth p = 8")?;
    check(default_gap(1000).ok() == Some(22), "gap p = 1000")?;
    check(default_gap(8).ok() == Some(2), "gap p = 8")?;
    let half = make_signal(&[100], &[0.0, 1.0], 200).map_err(|e| e.to_string())?;
    let t = permutation_tau(&half.values, 7, 100, 0.05, 5).map_err(|e| e.to_string())?;
    check(t.tau < 1.0, "pure jump permutation tau < 1")?;

    let p = 1000;
    let eye = identity_design(p).map_err(|e| e.to_string())?;
    let (mut upper, mut near) = (0, 0);
    for run in 0..50u64 {
        let mut rng = rng_for(run, &[purpose::NOISE, 1]);
        let y = normals(&mut rng, p, 1.0);
        let grid = lambda_grid(lambda_max(&eye, &y).map_err(|e| e.to_string())?, 40, 1e-3)
            .map_err(|e| e.to_string())?;
        let cv = cross_validate(&eye, &y, &grid, 5, CvEstimator::Fused, run, &cfg)
            .map_err(|e| e.to_string())?;
        if grid
            .iter()
            .position(|&l| l == cv.lambda2)
            .is_some_and(|r| r < grid.len() / 2)
        {
            upper += 1;
        }
        let y: Vec<f64> = nine
            .values
            .iter()
            .zip(normals(&mut rng, p, 1.0))
            .map(|(a, e)| a + e)
            .collect();
        let grid = lambda_grid(lambda_max(&eye, &y).map_err(|e| e.to_string())?, 40, 1e-3)
            .map_err(|e| e.to_string())?;
        let err = |lam: f64| -> f64 {
            prox_tv_1d(&y, lam)
                .iter()
                .zip(&nine.values)
                .map(|(a, b)| (a - b) * (a - b))
                .sum()
        };
        let oracle = grid.iter().map(|&l| err(l)).fold(f64::INFINITY, f64::min);
        let cv = cross_validate(&eye, &y, &grid, 5, CvEstimator::Fused, run, &cfg)
            .map_err(|e| e.to_string())?;
        if err(cv.lambda2) <= 2.0 * oracle {
            near += 1;
        }
    }
    check(
        upper >= 45,
        &format!("null CV picks the upper half in {upper} of 50"),
    )?;
    check(
        near >= 40,
        &format!("CV within 2x of the grid oracle in {near} of 50"),
    )?;

    // Metrics.
    check(
        one_sided(&[10, 90], &[50], 100) == 40.0,
        "d({10, 90} | {50}) = 40",
    )?;
    let mut rng = rng_for(303, &[]);
    for _ in 0..200 {
        let m1 = random_set(&mut rng, 60);
        let m2 = random_set(&mut rng, 60);
        check(
            one_sided(&m1, &m2, 60) == naive_one_sided(&m1, &m2, 60),
            "one-sided distance against a scalar loop",
        )?;
    }

    // Designs and RIC sampling.
    let (n, p) = (200, 40);
    let g =
        gaussian_design(n, p, CovarianceSpec::identity(p), 5, true).map_err(|e| e.to_string())?;
    let mean_sq = g.data.row_iter().map(|r| r.norm_squared()).sum::<f64>() / n as f64;
    check(
        (mean_sq - p as f64 / n as f64).abs() < 0.01,
        "row-scaled squared row norm ~ p/n",
    )?;
    let samples = sample_constraint_set(4, 10.0, 1000, 2).map_err(|e| e.to_string())?;
    check(
        samples
            .iter()
            .any(|v| total_variation(v) > 0.9 * 10f64.sqrt()),
        "loose TV ball reaches 0.9 max TV",
    )?;

    // Aggregation.
    let s = summarise(&[1.0, 3.0]).map_err(|e| e.to_string())?;
    check(s.formatted == "2.00 (1.41)", "aggregate of {1, 3}")?;
    Ok(format!("{done} hand checks"))
}

fn random_set(rng: &mut impl Rng, p: usize) -> Vec<usize> {
    let k = rng.random_range(0..6);
    let mut s: Vec<usize> = (0..k).map(|_| rng.random_range(1..p)).collect();
    s.sort_unstable();
    s.dedup();
    s
}

fn naive_one_sided(m1: &[usize], m2: &[usize], p: usize) -> f64 {
    if m1.is_empty() && m2.is_empty() {
        return 0.0;
    }
    if m1.is_empty() || m2.is_empty() {
        return p as f64;
    }
    let mut worst = 0usize;
    for &b in m2 {
        let mut best = usize::MAX;
        for &a in m1 {
            best = best.min(a.abs_diff(b));
        }
        worst = worst.max(best);
    }
    worst as f64
}

fn simulate(
    preset: &str,
    reps: usize,
    tweak: impl FnOnce(&mut Scenario),
) -> Result<Aggregate, String> {
    let mut s = Scenario::preset(preset).map_err(|e| e.to_string())?;
    s.replications = reps;
    tweak(&mut s);
    let out = runner::run(&s, 0).map_err(|e| e.to_string())?;
    aggregate(&out.records).map_err(|e| e.to_string())
}

fn stat(agg: &Aggregate, method: &str, metric: &str) -> (f64, f64) {
    let s = agg
        .method(method)
        .and_then(|m| m.get(metric))
        .expect("metric present");
    (s.mean, s.sd)
}

fn criterion_3() -> Check {
    let agg = simulate("identity-one-cp", 100, |_| {})?;
    let (count, count_sd) = stat(&agg, "FLMTF", "count_error");
    let (d, d_sd) = stat(&agg, "FL", "d_est_given_true");
    let se = d_sd / (agg.replications as f64).sqrt();
    let detail = format!("FLMTF count error {count:.2} ({count_sd:.2}); FL d(S(x)|S0) {d:.2} ({d_sd:.2}), 1.13 +- {:.2}", 3.0 * se);
    ensure((0.0..=0.6).contains(&count), || {
        format!("count error outside [0, 0.6]: {detail}")
    })?;
    ensure((d - 1.13).abs() <= 3.0 * se, || {
        format!("FL distance outside 3 SE of 1.13: {detail}")
    })?;
    Ok(detail)
}

fn criterion_4() -> Check {
    let agg = simulate("identity-nine-equal", 100, |_| {})?;
    let (count, count_sd) = stat(&agg, "FLMTF", "count_error");
    let (fl, _) = stat(&agg, "FL", "d_true_given_est");
    let (mf, _) = stat(&agg, "FLMF", "d_true_given_est");
    let detail = format!(
        "FLMTF count error {count:.2} ({count_sd:.2}); d(S0|S(x)) FL {fl:.2}, FLMF {mf:.2}"
    );
    ensure((0.5..=2.5).contains(&count), || {
        format!("count error outside [0.5, 2.5]: {detail}")
    })?;
    ensure(mf < fl, || {
        format!("mean filter does not improve localisation: {detail}")
    })?;
    Ok(detail)
}

fn criterion_5() -> Check {
    let agg = simulate("gaussian-nine-equal", 50, |s| {
        s.n = 250;
        s.p = 500;
        s.sigma = 2.0;
    })?;
    let (count, sd) = stat(&agg, "FLMTF", "count_error");
    let detail = format!(
        "FLMTF count error {count:.2} ({sd:.2}), {} unconverged",
        agg.unconverged
    );
    ensure(count <= 0.5, || format!("count error above 0.5: {detail}"))?;
    Ok(detail)
}

fn criterion_6() -> Check {
    let mut inside = 0;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for trial in 0..100u64 {
        let seed = derive_seed(606, &[trial]);
        let a = gaussian_design(400, 50, CovarianceSpec::identity(50), seed, true)
            .map_err(|e| e.to_string())?;
        let mut cert = empirical_ric(&a.data, 2.0, 500, derive_seed(seed, &[purpose::RIC_SAMPLE]))
            .map_err(|e| e.to_string())?;
        lo = lo.min(cert.min_norm);
        hi = hi.max(cert.max_norm);
        if cert.check_interval(0.0, 0.1) {
            inside += 1;
        }
    }
    let detail = format!("{inside} of 100 trials inside; envelope range [{lo:.3}, {hi:.3}]");
    ensure(inside >= 95, || {
        format!("too few trials inside the interval: {detail}")
    })?;
    Ok(detail)
}

fn metric_axioms() -> Result<(), String> {
    let mut rng = rng_for(707, &[]);
    let p = 80;
    for _ in 0..2000 {
        let (a, b, c) = (
            random_set(&mut rng, p),
            random_set(&mut rng, p),
            random_set(&mut rng, p),
        );
        let h = |x: &[usize], y: &[usize]| hausdorff(x, y, p);
        ensure(h(&a, &b) == h(&b, &a), || format!("symmetry {a:?} {b:?}"))?;
        ensure(h(&a, &a) == 0.0, || format!("identity {a:?}"))?;
        ensure((h(&a, &b) == 0.0) == (a == b), || {
            format!("zero distance between distinct sets {a:?} {b:?}")
        })?;
        if !a.is_empty() && !b.is_empty() && !c.is_empty() {
            ensure(h(&a, &c) <= h(&a, &b) + h(&b, &c), || {
                format!("triangle {a:?} {b:?} {c:?}")
            })?;
        }
        if !a.is_empty() {
            ensure(h(&[], &a) == p as f64, || {
                format!("empty-set convention {a:?}")
            })?;
        }
    }
    ensure(hausdorff(&[], &[], p) == 0.0, || {
        "distance between empty sets".into()
    })
}

fn filter_inclusions() -> Result<(), String> {
    let mut rng = rng_for(708, &[]);
    for _ in 0..300 {
        let p = rng.random_range(20..300);
        let b = rng.random_range(1..(p - 1) / 2);
        let k = rng.random_range(0..8);
        let mut bounds: Vec<usize> = (0..k).map(|_| rng.random_range(1..p)).collect();
        bounds.sort_unstable();
        bounds.dedup();
        let levels = normals(&mut rng, bounds.len() + 1, 2.0);
        let mut x = make_signal(&bounds, &levels, p)
            .map(|s| s.values)
            .unwrap_or_else(|_| vec![0.0; p]);
        for v in &mut x {
            if rng.random_bool(0.1) {
                *v += rng.sample::<f64, _>(StandardNormal) * 0.3;
            }
        }
        let raw = change_points(&x);
        let tau = rng.random_range(0.0..1.5);
        let gap = rng.random_range(0..3 * b);
        let cand = candidate_set(&raw, b, p).map_err(|e| e.to_string())?;
        let s_i = mean_filter_raw(&x, &raw, b, tau).map_err(|e| e.to_string())?;
        let s_t = time_filter(&s_i, gap);
        ensure(s_i.iter().all(|i| cand.contains(i)), || {
            format!("S_I not inside I_F at p={p} b={b}")
        })?;
        ensure(s_t.iter().all(|i| s_i.contains(i)), || {
            format!("S_T not inside S_I at p={p} b={b} gap={gap}")
        })?;
    }
    Ok(())
}

fn kkt_residuals() -> Result<(), String> {
    let mut rng = rng_for(709, &[]);
    let cfg = SolverConfig::default();
    for trial in 0..100 {
        let p = rng.random_range(5..60);
        let n = rng.random_range(p / 2 + 1..2 * p);
        let a = DesignMatrix::external(DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal)));
        let mut x: Vec<f64> = vec![0.0; p];
        let mut level = 0.0;
        for v in x.iter_mut() {
            if rng.random_bool(0.1) {
                level = rng.sample::<f64, _>(StandardNormal) * 2.0;
            }
            *v = level;
        }
        let y: Vec<f64> = a
            .mul_vec(&x)
            .iter()
            .map(|v| v + 0.5 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let l2 = rng.random_range(0.5..20.0);
        let l1 = if trial % 2 == 0 {
            0.0
        } else {
            rng.random_range(0.1..5.0)
        };
        let fit = sparse_fused_lasso(&a, &y, l1, l2, &cfg).map_err(|e| e.to_string())?;
        let cert = kkt_certificate(&a.data, &y, &fit.coefficients, l1, l2);
        ensure(fit.converged && cert.residual <= 1e-4 * cert.scale, || {
            format!(
                "trial {trial} (n={n}, p={p}, l1={l1}): KKT residual {:e} vs scale {}",
                cert.residual, cert.scale
            )
        })?;
    }
    Ok(())
}

fn replay_bytes() -> Result<(), String> {
    let run = || -> Result<Vec<Vec<u8>>, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let out = Command::new(env!("CARGO_BIN_EXE_pcreg"))
            .args([
                "simulate",
                "--preset",
                "identity-nine-equal",
                "--reps",
                "5",
                "--seed",
                "7",
                "--out",
            ])
            .arg(dir.path())
            .env_remove("PCREG_SEED")
            .env_remove("PCREG_WORKERS")
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || {
            String::from_utf8_lossy(&out.stderr).into_owned()
        })?;
        ["replications.csv", "aggregate.json", "panel.svg"]
            .iter()
            .map(|f| std::fs::read(dir.path().join(f)).map_err(|e| e.to_string()))
            .collect()
    };
    ensure(run()? == run()?, || {
        "simulate artifacts differ between identical runs".into()
    })
}

/// Slope of `log mean ‖x̂ - x*‖²` against `log s` for CV-tuned fits on the
/// identity design.
fn scaling_slope() -> Result<f64, String> {
    let p = 1000;
    let reps = 20;
    let eye = identity_design(p).map_err(|e| e.to_string())?;
    let cfg = SolverConfig::default();
    let mut pts = Vec::new();
    for s in [1usize, 4, 9, 19] {
        let bounds: Vec<usize> = (1..=s).map(|k| k * p / (s + 1)).collect();
        let levels: Vec<f64> = (0..=s).map(|k| (k % 2) as f64).collect();
        let truth = make_signal(&bounds, &levels, p)
            .map_err(|e| e.to_string())?
            .values;
        let mut total = 0.0;
        for r in 0..reps {
            let seed = derive_seed(710, &[s as u64, r]);
            let mut rng = rng_for(seed, &[purpose::NOISE]);
            let y: Vec<f64> = truth
                .iter()
                .map(|v| v + rng.sample::<f64, _>(StandardNormal))
                .collect();
            let grid = lambda_grid(lambda_max(&eye, &y).map_err(|e| e.to_string())?, 40, 1e-3)
                .map_err(|e| e.to_string())?;
            let cv = cross_validate(
                &eye,
                &y,
                &grid,
                5,
                CvEstimator::Fused,
                derive_seed(seed, &[purpose::FOLDS]),
                &cfg,
            )
            .map_err(|e| e.to_string())?;
            let x = fused_lasso(&eye, &y, cv.lambda2, &cfg)
                .map_err(|e| e.to_string())?
                .coefficients;
            total += x
                .iter()
                .zip(&truth)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        pts.push(((s as f64).ln(), (total / reps as f64).ln()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

fn criterion_7() -> Check {
    metric_axioms().map_err(|e| format!("metric axioms: {e}"))?;
    filter_inclusions().map_err(|e| format!("filter inclusions: {e}"))?;
    kkt_residuals().map_err(|e| format!("KKT residuals: {e}"))?;
    replay_bytes().map_err(|e| format!("deterministic replay: {e}"))?;
    let slope = scaling_slope()?;
    ensure((0.5..=1.5).contains(&slope), || {
        format!("error-vs-s slope {slope:.3} outside [0.5, 1.5]")
    })?;
    Ok(format!(
        "metric axioms, filter inclusions, KKT residuals, byte-equal replay; slope {slope:.3}"
    ))
}

/// Shuffled order must not matter to the aggregate.
fn aggregation_is_order_free() -> Result<(), String> {
    let mut s = Scenario::preset("identity-one-cp").map_err(|e| e.to_string())?;
    s.replications = 6;
    s.p = 200;
    s.n = 200;
    let mut recs = runner::run(&s, 0).map_err(|e| e.to_string())?.records;
    let a = aggregate(&recs).map_err(|e| e.to_string())?;
    recs.shuffle(&mut rng_for(711, &[]));
    ensure(a == aggregate(&recs).map_err(|e| e.to_string())?, || {
        "aggregate depends on record order".into()
    })
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        (
            "solver-oracle equivalence",
            Duration::from_secs(60),
            criterion_1,
        ),
        ("hand-check suite", Duration::from_secs(600), criterion_2),
        (
            "identity design, one change point",
            Duration::from_secs(300),
            criterion_3,
        ),
        (
            "identity design, nine equal change points",
            Duration::from_secs(600),
            criterion_4,
        ),
        (
            "Gaussian design at reduced scale",
            Duration::from_secs(1200),
            criterion_5,
        ),
        ("RIC interval", Duration::from_secs(120), criterion_6),
        (
            "property suites and scaling",
            Duration::from_secs(600),
            || {
                aggregation_is_order_free()?;
                criterion_7()
            },
        ),
    ];
    let mut failed = 0;
    for (k, (name, budget, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let res = run();
        let took = t0.elapsed();
        let res = res.and_then(|d| {
            if took <= *budget {
                Ok(d)
            } else {
                Err(format!(
                    "{d}; took {:.1}s, budget {}s",
                    took.as_secs_f64(),
                    budget.as_secs()
                ))
            }
        });
        match res {
            Ok(d) => println!(
                "criterion {} PASS {name}: {d} [{:.1}s]",
                k + 1,
                took.as_secs_f64()
            ),
            Err(e) => {
                failed += 1;
                println!(
                    "criterion {} FAIL {name}: {e} [{:.1}s]",
                    k + 1,
                    took.as_secs_f64()
                );
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
