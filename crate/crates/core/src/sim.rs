// SPDX-License-Identifier: MIT OR Apache-2.0

//! Simulation scenarios, single replications and aggregation.
//!
//! A replication draws a design and noise from streams derived from the
//! scenario seed and the replication index, fits the fused lasso with a
//! cross-validated λ, and evaluates the raw, mean-filtered and time-filtered
//! change-point sets. Replications share nothing, so they can run in any
//! order or in parallel with identical results.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // unused when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::design::{
    band_design, gaussian_design, identity_design, CovarianceSpec, DesignFamily, DesignMatrix,
};
use crate::metrics::{evaluate_stages, EvalResult, StageResults};
use crate::postprocess::ChangePointReport;
use crate::seed::{self, purpose};
use crate::signal::{make_signal, PiecewiseSignal};
use crate::solver::{fused_lasso, lambda_grid, lambda_max, SolverConfig};
use crate::tuning::{cross_validate, CvEstimator, RefitData, TuningPlan};
use crate::{Error, Result};

/// Reference dimension of the layouts; other `p` rescale the boundaries.
pub const REFERENCE_P: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CpLayout {
    OneCp,
    NineEqual,
    NineUnequal,
}

impl CpLayout {
    fn reference_boundaries(self) -> &'static [usize] {
        match self {
            Self::OneCp => &[500],
            Self::NineEqual => &[100, 200, 300, 400, 500, 600, 700, 800, 900],
            Self::NineUnequal => &[200, 310, 360, 390, 450, 490, 570, 640, 770],
        }
    }

    fn level_factors(self) -> &'static [f64] {
        match self {
            Self::OneCp => &[0.0, 1.0],
            Self::NineEqual | Self::NineUnequal => {
                &[0.0, 1.0, 0.0, 1.5, 0.0, 2.0, 0.0, 1.75, 0.0, 0.75]
            }
        }
    }
}

/// True coefficient vector of a layout. For `p != 1000` the boundaries are
/// scaled by `p / 1000` and rounded.
pub fn expand_layout(layout: CpLayout, gamma: f64, p: usize) -> Result<PiecewiseSignal> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::param("gamma must be positive and finite"));
    }
    let bounds: Vec<usize> = layout
        .reference_boundaries()
        .iter()
        .map(|&b| {
            if p == REFERENCE_P {
                b
            } else {
                ((b * p) as f64 / REFERENCE_P as f64).round() as usize
            }
        })
        .collect();
    let levels: Vec<f64> = layout.level_factors().iter().map(|f| f * gamma).collect();
    make_signal(&bounds, &levels, p)
        .map_err(|e| Error::param(format!("layout {layout:?} does not fit p = {p}: {e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub design: DesignFamily,
    pub n: usize,
    pub p: usize,
    /// Scale Gaussian design rows by `n^{-1/2}`.
    pub row_scaled: bool,
    pub layout: CpLayout,
    pub gamma: f64,
    pub sigma: f64,
    pub replications: usize,
    pub seed: u64,
    /// Recompute the λ grid from each replication's own `λ_max` instead of
    /// sharing the grid of replication 0.
    pub per_rep_grid: bool,
    pub tuning: TuningPlan,
    pub solver: SolverConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: None,
            design: DesignFamily::Identity,
            n: 1000,
            p: 1000,
            row_scaled: false,
            layout: CpLayout::OneCp,
            gamma: 1.0,
            sigma: 1.0,
            replications: 100,
            seed: 0,
            per_rep_grid: false,
            tuning: TuningPlan::default(),
            solver: SolverConfig::default(),
        }
    }
}

const FAMILIES: [&str; 4] = ["identity", "band", "gaussian", "gaussian-band"];
const LAYOUTS: [(&str, CpLayout); 3] = [
    ("one-cp", CpLayout::OneCp),
    ("nine-equal", CpLayout::NineEqual),
    ("nine-unequal", CpLayout::NineUnequal),
];

/// Names accepted by [`Scenario::preset`].
pub fn preset_names() -> Vec<String> {
    let mut out = Vec::new();
    for f in FAMILIES {
        for (l, _) in LAYOUTS {
            out.push(format!("{f}-{l}"));
        }
    }
    out
}

impl Scenario {
    /// Named preset `<family>-<layout>` at `p = 1000`, `γ = 1`, 100
    /// replications. Identity uses `n = p` and `σ = 1`; band uses `h = 10`,
    /// `n = p`; Gaussian designs use `n = 500`, with `h = 50` for the band
    /// covariance; the random families use `σ = 2`.
    pub fn preset(name: &str) -> Result<Self> {
        let (family, layout) = LAYOUTS
            .iter()
            .find_map(|&(suffix, layout)| {
                name.strip_suffix(suffix)
                    .and_then(|f| f.strip_suffix('-'))
                    .map(|f| (f, layout))
            })
            .ok_or_else(|| unknown_preset(name))?;
        let (design, n, sigma) = match family {
            "identity" => (DesignFamily::Identity, 1000, 1.0),
            "band" => (DesignFamily::Band { h: 10 }, 1000, 2.0),
            "gaussian" => (DesignFamily::GaussianIdentity, 500, 2.0),
            "gaussian-band" => (DesignFamily::GaussianBandCov { h: 50 }, 500, 2.0),
            _ => return Err(unknown_preset(name)),
        };
        Ok(Self {
            name: Some(name.into()),
            design,
            n,
            sigma,
            layout,
            ..Self::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(self.design, DesignFamily::External) {
            return Err(Error::param("simulations need a generated design family"));
        }
        if self.p < 2 || self.n == 0 {
            return Err(Error::param("scenario needs p >= 2 and n >= 1"));
        }
        if matches!(self.design, DesignFamily::Identity) && self.n != self.p {
            return Err(Error::param("identity design needs n = p"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::param("sigma must be finite and nonnegative"));
        }
        if self.replications == 0 {
            return Err(Error::param("need at least one replication"));
        }
        self.tuning.validate()?;
        self.solver.validate()?;
        expand_layout(self.layout, self.gamma, self.p)?;
        Ok(())
    }

    pub fn signal(&self) -> Result<PiecewiseSignal> {
        expand_layout(self.layout, self.gamma, self.p)
    }

    fn rep_seed(&self, rep: usize) -> u64 {
        seed::derive_seed(self.seed, &[rep as u64])
    }

    /// Design and response of replication `rep`.
    pub fn generate(
        &self,
        rep: usize,
        signal: &PiecewiseSignal,
    ) -> Result<(DesignMatrix, Vec<f64>)> {
        let rs = self.rep_seed(rep);
        let design_seed = seed::derive_seed(rs, &[purpose::DESIGN]);
        let a = match self.design {
            DesignFamily::Identity => identity_design(self.p)?,
            DesignFamily::Band { h } => band_design(self.n, self.p, h, design_seed)?,
            DesignFamily::GaussianIdentity => gaussian_design(
                self.n,
                self.p,
                CovarianceSpec::identity(self.p),
                design_seed,
                self.row_scaled,
            )?,
            DesignFamily::GaussianBandCov { h } => gaussian_design(
                self.n,
                self.p,
                CovarianceSpec::band_taper(h, self.p),
                design_seed,
                self.row_scaled,
            )?,
            DesignFamily::External => {
                return Err(Error::param("simulations need a generated design family"))
            }
        };
        let mut rng = seed::rng_for(rs, &[purpose::NOISE]);
        let y = a
            .mul_vec(&signal.values)
            .into_iter()
            .map(|v| v + self.sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Ok((a, y))
    }

    /// The λ₂ grid of replication `rep` under the tuning plan.
    pub fn grid_for(&self, a: &DesignMatrix, y: &[f64]) -> Result<Vec<f64>> {
        if let Some(g) = &self.tuning.lambda_grid {
            return Ok(g.clone());
        }
        let top = lambda_max(a, y)?;
        // A flat response has λ_max = 0; any positive grid then gives the
        // same constant fit.
        lambda_grid(
            if top > 0.0 { top } else { 1.0 },
            self.tuning.grid_size,
            self.tuning.grid_min_ratio,
        )
    }

    /// Grid shared by all replications: the plan's explicit grid, or the
    /// grid built from replication 0.
    pub fn shared_grid(&self) -> Result<Vec<f64>> {
        let signal = self.signal()?;
        let (a, y) = self.generate(0, &signal)?;
        self.grid_for(&a, &y)
    }
}

fn unknown_preset(name: &str) -> Error {
    Error::param(format!(
        "unknown preset '{name}'; known presets: {}",
        preset_names().join(", ")
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub rep_index: usize,
    pub seed: u64,
    pub lambda2: f64,
    pub cv_error: f64,
    pub bandwidth: usize,
    pub tau: f64,
    pub gap: usize,
    pub no_signal: bool,
    pub converged: bool,
    pub iterations: usize,
    pub results: StageResults,
}

/// One replication of `scenario`. Pass the shared grid, or `None` to build
/// one from this replication's data.
pub fn run_replication(
    scenario: &Scenario,
    rep: usize,
    grid: Option<&[f64]>,
) -> Result<ReplicationRecord> {
    let signal = scenario.signal()?;
    let (a, y) = scenario.generate(rep, &signal)?;
    let rs = scenario.rep_seed(rep);
    let own;
    let grid = match grid {
        Some(g) if !scenario.per_rep_grid => g,
        _ => {
            own = scenario.grid_for(&a, &y)?;
            &own[..]
        }
    };
    let cv = cross_validate(
        &a,
        &y,
        grid,
        scenario.tuning.folds,
        CvEstimator::Fused,
        seed::derive_seed(rs, &[purpose::FOLDS]),
        &scenario.solver,
    )?;
    let fit = fused_lasso(&a, &y, cv.lambda2, &scenario.solver)?;
    let refit = RefitData {
        a: &a,
        y: &y,
        lambda2: cv.lambda2,
        solver: &scenario.solver,
    };
    let report: ChangePointReport = scenario.tuning.localise(
        &fit.coefficients,
        Some(refit),
        seed::derive_seed(rs, &[purpose::PERMUTATION]),
    )?;
    let results = evaluate_stages(
        &fit.coefficients,
        &signal.values,
        &signal.change_points,
        &report,
        None,
    )?;
    let cv_error = cv
        .curve
        .iter()
        .find(|c| c.lambda2 == cv.lambda2)
        .map_or(f64::NAN, |c| c.error);
    Ok(ReplicationRecord {
        rep_index: rep,
        seed: rs,
        lambda2: cv.lambda2,
        cv_error,
        bandwidth: report.config.bandwidth,
        tau: report.config.tau,
        gap: report.config.gap,
        no_signal: report.no_signal,
        converged: fit.converged && cv.unconverged == 0,
        iterations: fit.iterations,
        results,
    })
}

/// Runs every replication in order.
pub fn run_scenario(scenario: &Scenario) -> Result<Vec<ReplicationRecord>> {
    scenario.validate()?;
    let grid = scenario.shared_grid()?;
    (0..scenario.replications)
        .map(|r| run_replication(scenario, r, Some(&grid)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    /// `"mean (sd)"` with two decimals.
    pub formatted: String,
}

/// Sample mean and `n - 1` standard deviation. Values are summed in sorted
/// order so the result does not depend on input order.
pub fn summarise(values: &[f64]) -> Result<Summary> {
    if values.len() < 2 {
        return Err(Error::TooFewRecords {
            needed: 2,
            got: values.len(),
        });
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let mut dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    dev.sort_by(f64::total_cmp);
    let sd = (dev.iter().sum::<f64>() / (n - 1.0)).sqrt();
    Ok(Summary {
        mean,
        sd,
        formatted: format!("{mean:.2} ({sd:.2})"),
    })
}

pub const METRIC_NAMES: [&str; 7] = [
    "coef_sq_error",
    "coef_mse",
    "d_est_given_true",
    "d_true_given_est",
    "hausdorff",
    "count_error",
    "num_estimated",
];

pub fn metric_value(r: &EvalResult, name: &str) -> Option<f64> {
    Some(match name {
        "coef_sq_error" => r.coef_sq_error,
        "coef_mse" => r.coef_mse,
        "d_est_given_true" => r.d_est_given_true,
        "d_true_given_est" => r.d_true_given_est,
        "hausdorff" => r.hausdorff,
        "count_error" => r.count_error as f64,
        "num_estimated" => r.num_estimated as f64,
        _ => return None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub metrics: Vec<MetricSummary>,
}

impl MethodSummary {
    pub fn get(&self, metric: &str) -> Option<&Summary> {
        self.metrics
            .iter()
            .find(|m| m.metric == metric)
            .map(|m| &m.summary)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub replications: usize,
    pub unconverged: usize,
    pub methods: Vec<MethodSummary>,
}

impl Aggregate {
    pub fn method(&self, name: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == name)
    }
}

/// Per-method, per-metric mean and standard deviation.
pub fn aggregate(records: &[ReplicationRecord]) -> Result<Aggregate> {
    if records.len() < 2 {
        return Err(Error::TooFewRecords {
            needed: 2,
            got: records.len(),
        });
    }
    let mut methods = Vec::new();
    for stage in 0..3 {
        let name = records[0].results.stages()[stage].0;
        let mut metrics = Vec::new();
        for metric in METRIC_NAMES {
            let values: Vec<f64> = records
                .iter()
                .filter_map(|r| metric_value(r.results.stages()[stage].1, metric))
                .collect();
            metrics.push(MetricSummary {
                metric: metric.into(),
                summary: summarise(&values)?,
            });
        }
        methods.push(MethodSummary {
            method: name.into(),
            metrics,
        });
    }
    Ok(Aggregate {
        replications: records.len(),
        unconverged: records.iter().filter(|r| !r.converged).count(),
        methods,
    })
}

/// `(method, metric, values)` columns, for plotting.
pub fn metric_columns(
    records: &[ReplicationRecord],
    metric: &str,
) -> Vec<(&'static str, Vec<f64>)> {
    let mut out = vec![
        ("FL", Vec::new()),
        ("FLMF", Vec::new()),
        ("FLMTF", Vec::new()),
    ];
    for r in records {
        for (k, (_, e)) in r.results.stages().iter().enumerate() {
            if let Some(v) = metric_value(e, metric) {
                out[k].1.push(v);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuning::TauRule;

    #[test]
    fn layouts() {
        let one = expand_layout(CpLayout::OneCp, 1.0, 1000).unwrap();
        assert_eq!(one.change_points, vec![500]);
        assert_eq!(one.min_spacing, 500);
        assert_eq!(one.min_jump, Some(1.0));

        let nine = expand_layout(CpLayout::NineEqual, 1.0, 1000).unwrap();
        assert_eq!(nine.num_change_points(), 9);
        assert_eq!(nine.min_jump, Some(0.75));
        assert!((nine.total_variation() - 13.25).abs() < 1e-12);
        assert_eq!(nine.min_spacing, 100);

        let uneq = expand_layout(CpLayout::NineUnequal, 2.0, 1000).unwrap();
        assert_eq!(
            uneq.change_points,
            vec![200, 310, 360, 390, 450, 490, 570, 640, 770]
        );
        assert_eq!(uneq.min_spacing, 30);
        assert_eq!(uneq.min_jump, Some(1.5));

        let small = expand_layout(CpLayout::NineEqual, 1.0, 500).unwrap();
        assert_eq!(
            small.change_points,
            (1..10).map(|k| 50 * k).collect::<Vec<_>>()
        );
        assert!(expand_layout(CpLayout::NineUnequal, 1.0, 10).is_err());
        assert!(expand_layout(CpLayout::OneCp, 0.0, 100).is_err());
    }

    #[test]
    fn presets() {
        let names = preset_names();
        assert_eq!(names.len(), 12);
        for n in &names {
            let s = Scenario::preset(n).unwrap();
            assert!(s.validate().is_ok(), "{n}");
            assert_eq!(s.p, 1000);
        }
        let s = Scenario::preset("gaussian-band-nine-equal").unwrap();
        assert_eq!(s.design, DesignFamily::GaussianBandCov { h: 50 });
        assert_eq!(s.n, 500);
        let err = Scenario::preset("identity-two-cp").unwrap_err();
        assert!(format!("{err}").contains("identity-nine-equal"));
        assert!(Scenario::preset("spiral-one-cp").is_err());
    }

    #[test]
    fn summaries() {
        let s = summarise(&[1.0, 3.0]).unwrap();
        assert_eq!(s.formatted, "2.00 (1.41)");
        assert!((s.sd - 2.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(summarise(&[2.5, 2.5]).unwrap().sd, 0.0);
        assert!(matches!(
            summarise(&[1.0]),
            Err(Error::TooFewRecords { needed: 2, got: 1 })
        ));
        let a = summarise(&[0.1, 0.7, 0.2, 1e-9, 3.3]).unwrap();
        let b = summarise(&[3.3, 1e-9, 0.2, 0.7, 0.1]).unwrap();
        assert_eq!(a, b);
    }

    fn small_identity() -> Scenario {
        Scenario {
            n: 200,
            p: 200,
            layout: CpLayout::NineEqual,
            sigma: 0.3,
            replications: 3,
            seed: 5,
            ..Scenario::default()
        }
    }

    #[test]
    fn replications_are_reproducible_and_order_free() {
        let s = small_identity();
        let grid = s.shared_grid().unwrap();
        let r2 = run_replication(&s, 2, Some(&grid)).unwrap();
        let all = run_scenario(&s).unwrap();
        assert_eq!(all[2], r2);
        assert_eq!(all, run_scenario(&s).unwrap());
        assert_ne!(all[0].seed, all[1].seed);
    }

    #[test]
    fn noiseless_identity_recovers_the_signal() {
        let s = Scenario {
            sigma: 0.0,
            ..small_identity()
        };
        let rec = run_replication(&s, 0, None).unwrap();
        let fl = &rec.results.fl;
        assert_eq!(fl.hausdorff, 0.0);
        assert_eq!(fl.count_error, 0);
        assert!(fl.coef_mse < 1e-2, "{}", fl.coef_mse);
        // The filters may drop small jumps but never add points.
        assert_eq!(rec.results.flmtf.d_true_given_est, 0.0);
    }

    #[test]
    fn aggregate_shape_and_errors() {
        let s = small_identity();
        let recs = run_scenario(&s).unwrap();
        let agg = aggregate(&recs).unwrap();
        assert_eq!(agg.replications, 3);
        assert_eq!(agg.methods.len(), 3);
        assert_eq!(
            agg.method("FLMTF").unwrap().metrics.len(),
            METRIC_NAMES.len()
        );
        let mut rev = recs.clone();
        rev.reverse();
        assert_eq!(aggregate(&rev).unwrap(), agg);
        assert!(matches!(
            aggregate(&recs[..1]),
            Err(Error::TooFewRecords { .. })
        ));

        let twice = [recs[0].clone(), recs[0].clone()];
        let agg = aggregate(&twice).unwrap();
        assert!(agg
            .methods
            .iter()
            .all(|m| m.metrics.iter().all(|x| x.summary.sd == 0.0)));
    }

    #[test]
    fn random_designs_run() {
        let s = Scenario {
            design: DesignFamily::GaussianBandCov { h: 3 },
            n: 60,
            p: 80,
            layout: CpLayout::OneCp,
            sigma: 0.5,
            replications: 2,
            tuning: TuningPlan {
                grid_size: 8,
                ..TuningPlan::default()
            },
            ..Scenario::default()
        };
        let recs = run_scenario(&s).unwrap();
        assert_eq!(recs.len(), 2);
        let (a0, _) = s.generate(0, &s.signal().unwrap()).unwrap();
        let (a1, _) = s.generate(1, &s.signal().unwrap()).unwrap();
        assert_ne!(a0.data, a1.data);
    }

    #[test]
    fn fixed_tau_plan_is_honoured() {
        let s = Scenario {
            tuning: TuningPlan {
                tau: TauRule::Fixed { tau: 1e9 },
                ..TuningPlan::default()
            },
            ..small_identity()
        };
        let rec = run_replication(&s, 0, None).unwrap();
        assert!(rec.results.flmtf.num_estimated == 0);
        assert_eq!(rec.tau, 1e9);
    }

    #[test]
    fn scenario_round_trips_and_rejects_unknown_fields() {
        let s = Scenario::preset("band-nine-unequal").unwrap();
        let js = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<Scenario>(&js).unwrap(), s);
        assert!(serde_json::from_str::<Scenario>(r#"{"bogus": 1}"#).is_err());
        let partial: Scenario = serde_json::from_str(r#"{"sigma": 2.0}"#).unwrap();
        assert_eq!(partial.sigma, 2.0);
        assert_eq!(partial.p, 1000);
    }
}
