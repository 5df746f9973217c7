// SPDX-License-Identifier: MIT OR Apache-2.0

//! Run configuration.
//!
//! Every option can come from a JSON config file (`--config`), from the
//! environment (`PCREG_SEED`, `PCREG_WORKERS` only) or from a flag.
//! Precedence, lowest first: built-in default, config file, environment,
//! flag. Each option struct doubles as the flag set of a subcommand and as a
//! section of the file, so both spell options the same way (`snake_case`
//! in JSON, `--kebab-case` on the command line).

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use pcreg_core::sim::Scenario;
use pcreg_core::solver::SolverConfig;
use pcreg_core::tuning::PermutationNull;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

pub const CONFIG_SCHEMA: &str = "pcreg.config/1";

/// Options shared by every command.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommonArgs {
    /// Master seed.
    #[arg(long, env = "PCREG_SEED")]
    pub seed: Option<u64>,
    /// Worker threads for replications (0: one per core).
    #[arg(long, env = "PCREG_WORKERS")]
    pub workers: Option<usize>,
    /// Directory receiving the artifacts.
    #[arg(long = "out", value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

/// Where the design and response come from.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputArgs {
    /// Design matrix CSV, `n` rows of `p` values.
    #[arg(long, value_name = "CSV", conflicts_with = "data")]
    pub design: Option<PathBuf>,
    /// Response CSV, one value per row.
    #[arg(long, value_name = "CSV", conflicts_with = "data")]
    pub response: Option<PathBuf>,
    /// Single CSV holding design columns and the response.
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,
    /// 1-based response column of `--data` (default: last).
    #[arg(long, requires = "data")]
    pub response_col: Option<usize>,
    /// Use the identity design (`--response` only).
    #[arg(long, num_args = 0..=1, default_missing_value = "true", conflicts_with_all = ["design", "data"])]
    pub identity: Option<bool>,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverArgs {
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Initial ADMM penalty parameter.
    #[arg(long)]
    pub rho: Option<f64>,
}

impl SolverArgs {
    pub fn resolve(&self) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            abs_tol: self.abs_tol.unwrap_or(d.abs_tol),
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            admm_rho: self.rho.unwrap_or(d.admm_rho),
            warm_start: None,
        }
    }
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitArgs {
    /// Penalty on `‖x‖₁`.
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// Penalty on `‖Dx‖₁`; 0 gives least squares.
    #[arg(long, conflicts_with_all = ["constrained_v", "cv"])]
    pub lambda2: Option<f64>,
    /// Constrain `‖Dx‖₁ ≤ V` instead of penalising.
    #[arg(long = "constrained-V", value_name = "V", conflicts_with_all = ["cv", "lambda1"])]
    pub constrained_v: Option<f64>,
    /// Choose λ₂ by K-fold cross-validation.
    #[arg(long, value_name = "FOLDS")]
    pub cv: Option<usize>,
    /// Number of λ₂ values in the cross-validation grid.
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Smallest grid value as a fraction of `λ_max`.
    #[arg(long)]
    pub grid_min_ratio: Option<f64>,
    /// Cross-validate the sparse estimator with `λ₁ = ratio·λ₂`.
    #[arg(long, requires = "cv", conflicts_with = "lambda1")]
    pub sparse_ratio: Option<f64>,
    /// Centre and scale design columns to mean 0, sample sd 1.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub standardise: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NullArg {
    Residuals,
    Coefficients,
}

impl From<NullArg> for PermutationNull {
    fn from(n: NullArg) -> Self {
        match n {
            NullArg::Residuals => PermutationNull::Residuals,
            NullArg::Coefficients => PermutationNull::Coefficients,
        }
    }
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectArgs {
    /// Fitted coefficients CSV; without it a fit is run first.
    #[arg(long, value_name = "CSV")]
    pub coefficients: Option<PathBuf>,
    /// Mean-filter half window (default: the logarithmic rule).
    #[arg(long)]
    pub bandwidth: Option<usize>,
    /// Fixed threshold (default: permutation quantile).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Time-filter gap (default: twice the bandwidth).
    #[arg(long)]
    pub gap: Option<usize>,
    /// Permutation replicates B.
    #[arg(long)]
    pub permutations: Option<usize>,
    /// Permutation level; τ is the (1 - α) quantile.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Permutation null (default: residuals when the data are available).
    #[arg(long, value_enum)]
    pub null: Option<NullArg>,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    /// Named scenario, e.g. identity-nine-equal.
    #[arg(long)]
    pub preset: Option<String>,
    /// Full scenario (config file only).
    #[arg(skip)]
    pub scenario: Option<Scenario>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Scale Gaussian design rows by `n^{-1/2}`.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub row_scaled: Option<bool>,
    /// Build each replication's λ grid from its own data.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub per_rep_grid: Option<bool>,
    /// Fixed mean-filter threshold instead of the permutation rule.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub permutations: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub grid_size: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    Identity,
    Band,
    Gaussian,
    GaussianBand,
}

/// A generated design.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Band half-width, or taper bandwidth of the band covariance.
    #[arg(long)]
    pub h: Option<usize>,
    /// Scale rows by `n^{-1/2}`.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub row_scaled: Option<bool>,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RicArgs {
    /// TV radius of the constraint set.
    #[arg(long)]
    pub t: Option<f64>,
    /// Feasible vectors sampled.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Compare the envelope with the interval for this ζ.
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Slack on both ends of the interval.
    #[arg(long, requires = "zeta")]
    pub margin: Option<f64>,
}

/// Dump of one simulated data set.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportArgs {
    /// Write design, response and true coefficients of this scenario.
    #[arg(long)]
    pub preset: Option<String>,
    /// Replication to dump.
    #[arg(long)]
    pub rep: Option<usize>,
    /// Noise level of the dumped response.
    #[arg(long)]
    pub sigma: Option<f64>,
}

/// The whole configuration file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema: Option<String>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub input: InputArgs,
    pub solver: SolverArgs,
    pub fit: FitArgs,
    pub detect: DetectArgs,
    pub simulate: SimulateArgs,
    pub design: DesignArgs,
    pub export: ExportArgs,
    pub ric: RicArgs,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| CliError::Json {
            path: path.into(),
            source: e,
        })?;
        match cfg.schema.as_deref() {
            None | Some(CONFIG_SCHEMA) => Ok(cfg),
            Some(s) => Err(CliError::input(
                path,
                format!("unsupported config schema '{s}', expected '{CONFIG_SCHEMA}'"),
            )),
        }
    }

    pub fn common(&self) -> CommonArgs {
        CommonArgs {
            seed: self.seed,
            workers: self.workers,
            out_dir: self.out_dir.clone(),
        }
    }

    pub fn load_opt(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

/// `flags` laid over `file`: every option set in `flags` wins.
pub fn overlay<T: Serialize + serde::de::DeserializeOwned>(file: &T, flags: &T) -> T {
    fn merge(base: &mut Value, top: Value) {
        match (base, top) {
            (Value::Object(b), Value::Object(t)) => {
                for (k, v) in t {
                    match b.get_mut(&k) {
                        Some(slot) => merge(slot, v),
                        None => {
                            b.insert(k, v);
                        }
                    }
                }
            }
            (_, Value::Null) => {}
            (slot, v) => *slot = v,
        }
    }
    let mut base = serde_json::to_value(file).expect("config serialises");
    merge(
        &mut base,
        serde_json::to_value(flags).expect("config serialises"),
    );
    serde_json::from_value(base).expect("merged config deserialises")
}
