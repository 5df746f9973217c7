// SPDX-License-Identifier: MIT OR Apache-2.0

//! The `pcreg` command line.
//!
//! Exit status: 0 on success, 1 on runtime or convergence failure (with a
//! JSON diagnostic on stderr), 2 on a usage error.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use pcreg_core::design::{
    band_design, gaussian_design, identity_design, CovarianceSpec, DesignMatrix,
};
use pcreg_core::ric::empirical_ric;
use pcreg_core::seed::{derive_seed, purpose};
use pcreg_core::sim::metric_value;
use pcreg_core::sim::{aggregate, preset_names, ReplicationRecord, Scenario, METRIC_NAMES};
use pcreg_core::solver::{
    constrained_fused_lasso, fused_lasso, lambda_grid, lambda_max, least_squares,
    sparse_fused_lasso, SolverConfig,
};
use pcreg_core::tuning::{
    cross_validate, default_bandwidth, BandwidthRule, CvEstimator, GapRule, PermutationNull,
    RefitData, TauRule, TuningPlan,
};

use crate::artifacts::{
    write_json, AggregateArtifact, CertificateArtifact, CoefficientSource, CvInfo, DesignInfo,
    FitArtifact, FitMethod, ReportArtifact, AGGREGATE_SCHEMA, CERTIFICATE_SCHEMA, FIT_SCHEMA,
    REPORT_SCHEMA,
};
use crate::config::{
    overlay, CommonArgs, DesignArgs, DetectArgs, ExportArgs, FamilyArg, FitArgs, InputArgs,
    RicArgs, RunConfig, SimulateArgs, SolverArgs,
};
use crate::error::{CliError, Result};
use crate::io::{self, fmt_f64, Standardisation};
use crate::{runner, svg};

const DEFAULT_FOLDS: usize = 5;
const DEFAULT_GRID_SIZE: usize = 40;
const DEFAULT_GRID_MIN_RATIO: f64 = 1e-3;
const DEFAULT_PERMUTATIONS: usize = 100;
const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(
    name = "pcreg",
    version,
    about = "Piecewise-constant coefficient regression: fit, detect, simulate"
)]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, value_name = "JSON")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the fused lasso (penalised, constrained or cross-validated).
    Fit(FitCmd),
    /// Localise change points of a fit with the mean and time filters.
    Detect(DetectCmd),
    /// Run a simulation scenario and summarise FL, FLMF and FLMTF.
    Simulate(SimulateCmd),
    /// Empirical extremes of `‖Ax‖` over unit vectors with bounded TV.
    Ric(RicCmd),
    /// Design matrix utilities.
    #[command(subcommand)]
    Design(DesignCmd),
}

#[derive(Debug, clap::Args)]
pub struct FitCmd {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    fit: FitArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, clap::Args)]
pub struct DetectCmd {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    detect: DetectArgs,
    #[command(flatten)]
    fit: FitArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, clap::Args)]
pub struct SimulateCmd {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    simulate: SimulateArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, clap::Args)]
pub struct RicCmd {
    #[command(flatten)]
    common: CommonArgs,
    /// Design matrix CSV (default: a generated design).
    #[arg(long, value_name = "CSV")]
    design: Option<PathBuf>,
    #[command(flatten)]
    generated: DesignArgs,
    #[command(flatten)]
    ric: RicArgs,
}

#[derive(Debug, Subcommand)]
pub enum DesignCmd {
    /// Write a generated design (or a simulated data set) as CSV.
    Export(ExportCmd),
}

#[derive(Debug, clap::Args)]
pub struct ExportCmd {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    generated: DesignArgs,
    #[command(flatten)]
    export: ExportArgs,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            let mut err = std::io::stderr().lock();
            if let CliError::Usage(msg) = &e {
                let _ = writeln!(err, "error: {msg}\n\nFor more information, try '--help'.");
            } else {
                let _ = writeln!(err, "{}", e.diagnostic());
            }
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let file = RunConfig::load_opt(cli.config.as_deref())?;
    let common = |flags: &CommonArgs| overlay(&file.common(), flags);
    match cli.command {
        Command::Fit(c) => cmd_fit(
            &common(&c.common),
            &overlay(&file.input, &c.input),
            &overlay(&file.fit, &c.fit),
            &overlay(&file.solver, &c.solver).resolve(),
        ),
        Command::Detect(c) => cmd_detect(
            &common(&c.common),
            &overlay(&file.input, &c.input),
            &overlay(&file.detect, &c.detect),
            &overlay(&file.fit, &c.fit),
            &overlay(&file.solver, &c.solver).resolve(),
        ),
        Command::Simulate(c) => cmd_simulate(
            &common(&c.common),
            &overlay(&file.simulate, &c.simulate),
            overlay(&file.solver, &c.solver),
        ),
        Command::Ric(c) => cmd_ric(
            &common(&c.common),
            c.design.as_deref().or(file.input.design.as_deref()),
            &overlay(&file.design, &c.generated),
            &overlay(&file.ric, &c.ric),
        ),
        Command::Design(DesignCmd::Export(c)) => cmd_export(
            &common(&c.common),
            &overlay(&file.design, &c.generated),
            &overlay(&file.export, &c.export),
        ),
    }
}

fn out_dir(common: &CommonArgs) -> PathBuf {
    common.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
}

struct Loaded {
    a: DesignMatrix,
    y: Vec<f64>,
    standardisation: Option<Standardisation>,
}

fn load_input(input: &InputArgs, standardise: bool) -> Result<Loaded> {
    let (a, y) = match (
        &input.data,
        &input.design,
        &input.response,
        input.identity.unwrap_or(false),
    ) {
        (Some(d), None, None, false) => io::read_data(d, input.response_col)?,
        (None, Some(d), Some(r), false) => (io::read_design(d)?, io::read_response(r)?),
        (None, None, Some(r), true) => {
            let y = io::read_response(r)?;
            (identity_design(y.len())?, y)
        }
        (None, None, Some(_), false) => {
            return Err(CliError::usage("--response needs --design or --identity"));
        }
        _ => {
            return Err(CliError::usage(
                "give --data, --design with --response, or --identity with --response",
            ))
        }
    };
    if a.n() != y.len() {
        return Err(CliError::Runtime(format!(
            "design has {} rows but the response has {} values",
            a.n(),
            y.len()
        )));
    }
    if standardise {
        let (a, st) = io::standardise(&a)?;
        return Ok(Loaded {
            a,
            y,
            standardisation: Some(st),
        });
    }
    Ok(Loaded {
        a,
        y,
        standardisation: None,
    })
}

fn check_penalty(name: &str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::usage(format!(
            "{name} must be finite and nonnegative, got {v}"
        )))
    }
}

/// Runs the estimator selected by `fit`; `default_cv` applies when no
/// estimator is selected.
fn run_fit(
    data: &Loaded,
    fit: &FitArgs,
    solver: &SolverConfig,
    seed: u64,
    default_cv: bool,
) -> Result<FitArtifact> {
    let chosen = [
        fit.lambda2.is_some(),
        fit.constrained_v.is_some(),
        fit.cv.is_some(),
    ];
    let folds = match chosen.iter().filter(|&&c| c).count() {
        0 if default_cv => Some(DEFAULT_FOLDS),
        0 => {
            return Err(CliError::usage(
                "choose one of --lambda2, --constrained-V or --cv",
            ))
        }
        1 => fit.cv,
        _ => {
            return Err(CliError::usage(
                "--lambda2, --constrained-V and --cv are mutually exclusive",
            ))
        }
    };
    let lambda1 = check_penalty("--lambda1", fit.lambda1.unwrap_or(0.0))?;
    let (a, y) = (&data.a, &data.y[..]);
    let mut out = FitArtifact {
        schema: FIT_SCHEMA.into(),
        method: FitMethod::FusedLasso,
        design: DesignInfo::of(a),
        seed,
        budget: None,
        cv: None,
        standardisation: data.standardisation.clone(),
        fit: least_squares(a, y)?,
    };
    if let Some(v) = fit.constrained_v {
        if lambda1 > 0.0 {
            return Err(CliError::usage(
                "--constrained-V cannot be combined with --lambda1",
            ));
        }
        out.budget = Some(check_penalty("--constrained-V", v)?);
        out.method = FitMethod::Constrained;
        out.fit = constrained_fused_lasso(a, y, v, solver)?;
    } else if let Some(folds) = folds {
        if folds < 2 || folds > a.n() {
            return Err(CliError::usage(format!(
                "--cv needs between 2 and n = {} folds, got {folds}",
                a.n()
            )));
        }
        let grid_size = fit.grid_size.unwrap_or(DEFAULT_GRID_SIZE);
        let grid_min_ratio = fit.grid_min_ratio.unwrap_or(DEFAULT_GRID_MIN_RATIO);
        if grid_size == 0 || !(grid_min_ratio > 0.0 && grid_min_ratio <= 1.0) {
            return Err(CliError::usage(
                "--grid-size must be positive and --grid-min-ratio in (0, 1]",
            ));
        }
        let estimator = match fit.sparse_ratio {
            Some(r) => CvEstimator::Sparse {
                ratio: check_penalty("--sparse-ratio", r)?,
            },
            None if lambda1 > 0.0 => {
                return Err(CliError::usage(
                    "use --sparse-ratio to cross-validate with λ₁",
                ))
            }
            None => CvEstimator::Fused,
        };
        let top = lambda_max(a, y)?;
        let grid = lambda_grid(if top > 0.0 { top } else { 1.0 }, grid_size, grid_min_ratio)?;
        let cv = cross_validate(
            a,
            y,
            &grid,
            folds,
            estimator,
            derive_seed(seed, &[purpose::FOLDS]),
            solver,
        )?;
        out.fit = sparse_fused_lasso(a, y, cv.lambda1, cv.lambda2, solver)?;
        out.method = if cv.lambda1 > 0.0 {
            FitMethod::SparseFusedLasso
        } else {
            FitMethod::FusedLasso
        };
        out.cv = Some(CvInfo {
            folds,
            grid_size,
            grid_min_ratio,
            result: cv,
        });
    } else {
        let lambda2 = check_penalty("--lambda2", fit.lambda2.unwrap_or(0.0))?;
        if lambda1 == 0.0 && lambda2 == 0.0 {
            out.method = FitMethod::LeastSquares;
        } else if lambda1 == 0.0 {
            out.fit = fused_lasso(a, y, lambda2, solver)?;
        } else {
            out.method = FitMethod::SparseFusedLasso;
            out.fit = sparse_fused_lasso(a, y, lambda1, lambda2, solver)?;
        }
    }
    Ok(out)
}

fn unconverged(fit: &FitArtifact) -> CliError {
    CliError::Runtime(format!(
        "solver did not converge within {} iterations; artifacts were written with converged = false",
        fit.fit.iterations
    ))
}

fn cmd_fit(
    common: &CommonArgs,
    input: &InputArgs,
    fit: &FitArgs,
    solver: &SolverConfig,
) -> Result<()> {
    let data = load_input(input, fit.standardise.unwrap_or(false))?;
    let art = run_fit(&data, fit, solver, common.seed.unwrap_or(0), false)?;
    let dir = out_dir(common);
    io::write_coefficients(&dir.join("coefficients.csv"), &art.fit.coefficients)?;
    write_json(&dir.join("fit.json"), &art)?;
    println!(
        "{:?}: lambda1 = {}, lambda2 = {}, objective = {}, {} change points",
        art.method,
        art.fit.lambda1,
        art.fit.lambda2,
        art.fit.objective,
        pcreg_core::signal::change_points(&art.fit.coefficients).len()
    );
    if !art.fit.converged {
        return Err(unconverged(&art));
    }
    Ok(())
}

fn cmd_detect(
    common: &CommonArgs,
    input: &InputArgs,
    detect: &DetectArgs,
    fit: &FitArgs,
    solver: &SolverConfig,
) -> Result<()> {
    let seed = common.seed.unwrap_or(0);
    let dir = out_dir(common);
    let (x, data, fitted) = match &detect.coefficients {
        Some(path) => (io::read_coefficients(path)?, None, None),
        None => {
            let data = load_input(input, fit.standardise.unwrap_or(false))?;
            let art = run_fit(&data, fit, solver, seed, true)?;
            io::write_coefficients(&dir.join("coefficients.csv"), &art.fit.coefficients)?;
            write_json(&dir.join("fit.json"), &art)?;
            (art.fit.coefficients.clone(), Some(data), Some(art))
        }
    };
    let p = x.len();
    let b = match detect.bandwidth {
        Some(b) => b,
        None => default_bandwidth(p).map_err(|_| {
            CliError::usage(format!(
                "p = {p} is too small for the default bandwidth; pass --bandwidth"
            ))
        })?,
    };
    if b == 0 || 2 * b >= p {
        return Err(CliError::usage(format!(
            "--bandwidth must satisfy 1 <= b and 2b < p = {p}, got {b}"
        )));
    }
    let gap = detect.gap.unwrap_or(2 * b);

    let refit_ok = fitted.as_ref().is_some_and(|f| f.fit.lambda1 == 0.0);
    let tau = match detect.tau {
        Some(t) => TauRule::Fixed {
            tau: check_penalty("--tau", t)?,
        },
        None => {
            let permutations = detect.permutations.unwrap_or(DEFAULT_PERMUTATIONS);
            let alpha = detect.alpha.unwrap_or(DEFAULT_ALPHA);
            if permutations == 0 || !(alpha > 0.0 && alpha < 1.0) {
                return Err(CliError::usage(
                    "--permutations must be positive and --alpha in (0, 1)",
                ));
            }
            let null =
                match detect.null.map(PermutationNull::from) {
                    Some(PermutationNull::Residuals) if !refit_ok => return Err(CliError::usage(
                        "--null residuals needs the design and response and a fit with lambda1 = 0",
                    )),
                    Some(n) => n,
                    None if refit_ok => PermutationNull::Residuals,
                    None => PermutationNull::Coefficients,
                };
            TauRule::Permutation {
                permutations,
                alpha,
                null,
            }
        }
    };
    let plan = TuningPlan {
        bandwidth: BandwidthRule::Fixed { b },
        tau,
        gap: GapRule::Fixed { t: gap },
        ..TuningPlan::default()
    };
    let refit = match (&data, &fitted) {
        (Some(d), Some(f)) if refit_ok => Some(RefitData {
            a: &d.a,
            y: &d.y,
            lambda2: f.fit.lambda2,
            solver,
        }),
        _ => None,
    };
    let report = plan.localise(&x, refit, derive_seed(seed, &[purpose::PERMUTATION]))?;
    println!(
        "raw {}, filtered {}, pruned {}: {:?}",
        report.raw.len(),
        report.filtered.len(),
        report.pruned.len(),
        report.pruned
    );
    let converged = fitted.as_ref().map_or(true, |f| f.fit.converged);
    let art = ReportArtifact {
        schema: REPORT_SCHEMA.into(),
        p,
        seed,
        source: if fitted.is_some() {
            CoefficientSource::Fit
        } else {
            CoefficientSource::File
        },
        tau_rule: tau,
        fit: fitted,
        report,
    };
    write_json(&dir.join("report.json"), &art)?;
    if !converged {
        return Err(unconverged(art.fit.as_ref().expect("embedded fit")));
    }
    Ok(())
}

fn scenario_from(common: &CommonArgs, sim: &SimulateArgs, solver: SolverArgs) -> Result<Scenario> {
    let mut s = match (&sim.preset, &sim.scenario) {
        (Some(name), _) => Scenario::preset(name).map_err(|_| {
            CliError::usage(format!(
                "unknown preset '{name}'; known presets: {}",
                preset_names().join(", ")
            ))
        })?,
        (None, Some(s)) => s.clone(),
        (None, None) => {
            return Err(CliError::usage(format!(
                "give --preset or a scenario in the config file; known presets: {}",
                preset_names().join(", ")
            )))
        }
    };
    if let Some(seed) = common.seed {
        s.seed = seed;
    }
    if let Some(r) = sim.reps {
        s.replications = r;
    }
    if let Some(v) = sim.sigma {
        s.sigma = v;
    }
    if let Some(v) = sim.gamma {
        s.gamma = v;
    }
    if let Some(p) = sim.p {
        s.p = p;
        if matches!(s.design, pcreg_core::design::DesignFamily::Identity) && sim.n.is_none() {
            s.n = p;
        }
    }
    if let Some(n) = sim.n {
        s.n = n;
    }
    if let Some(v) = sim.row_scaled {
        s.row_scaled = v;
    }
    if let Some(v) = sim.per_rep_grid {
        s.per_rep_grid = v;
    }
    if let Some(v) = sim.folds {
        s.tuning.folds = v;
    }
    if let Some(v) = sim.grid_size {
        s.tuning.grid_size = v;
    }
    if let Some(tau) = sim.tau {
        s.tuning.tau = TauRule::Fixed { tau };
    } else if sim.permutations.is_some() || sim.alpha.is_some() {
        let (b0, a0, null) = match s.tuning.tau {
            TauRule::Permutation {
                permutations,
                alpha,
                null,
            } => (permutations, alpha, null),
            TauRule::Fixed { .. } => (
                DEFAULT_PERMUTATIONS,
                DEFAULT_ALPHA,
                PermutationNull::default(),
            ),
        };
        s.tuning.tau = TauRule::Permutation {
            permutations: sim.permutations.unwrap_or(b0),
            alpha: sim.alpha.unwrap_or(a0),
            null,
        };
    }
    s.solver = overlay(
        &SolverArgs {
            max_iters: Some(s.solver.max_iters),
            abs_tol: Some(s.solver.abs_tol),
            rel_tol: Some(s.solver.rel_tol),
            rho: Some(s.solver.admm_rho),
        },
        &solver,
    )
    .resolve();
    s.validate()
        .map_err(|e| CliError::usage(format!("invalid scenario: {e}")))?;
    Ok(s)
}

/// Header and rows of the per-replication CSV.
pub fn replications_csv(records: &[ReplicationRecord]) -> String {
    let mut header: Vec<String> = [
        "rep_index",
        "seed",
        "lambda2",
        "cv_error",
        "bandwidth",
        "tau",
        "gap",
        "no_signal",
        "converged",
        "iterations",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for method in ["FL", "FLMF", "FLMTF"] {
        header.extend(METRIC_NAMES.iter().map(|m| format!("{method}_{m}")));
    }
    let mut out = header.join(",");
    out.push('\n');
    for r in records {
        let mut row = vec![
            r.rep_index.to_string(),
            r.seed.to_string(),
            fmt_f64(r.lambda2),
            fmt_f64(r.cv_error),
            r.bandwidth.to_string(),
            fmt_f64(r.tau),
            r.gap.to_string(),
            r.no_signal.to_string(),
            r.converged.to_string(),
            r.iterations.to_string(),
        ];
        for (_, e) in r.results.stages() {
            row.extend(
                METRIC_NAMES
                    .iter()
                    .map(|m| metric_value(e, m).map_or_else(String::new, fmt_f64)),
            );
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn cmd_simulate(common: &CommonArgs, sim: &SimulateArgs, solver: SolverArgs) -> Result<()> {
    let scenario = scenario_from(common, sim, solver)?;
    let outcome = runner::run(&scenario, common.workers.unwrap_or(0))?;
    let dir = out_dir(common);
    io::write_file(
        &dir.join("replications.csv"),
        replications_csv(&outcome.records).as_bytes(),
    )?;
    let mut timings = String::from("rep_index,seconds\n");
    for (k, t) in outcome.timings.iter().enumerate() {
        timings.push_str(&format!("{k},{:.6}\n", t.as_secs_f64()));
    }
    io::write_file(&dir.join("timings.csv"), timings.as_bytes())?;

    let agg = aggregate(&outcome.records)?;
    let title = format!(
        "{} (n = {}, p = {}, sigma = {}, {} replications)",
        scenario.name.as_deref().unwrap_or("scenario"),
        scenario.n,
        scenario.p,
        scenario.sigma,
        scenario.replications
    );
    io::write_file(&dir.join("panel.svg"), svg::panel(&agg, &title).as_bytes())?;
    for m in &agg.methods {
        let cells: Vec<String> = svg::PANELS
            .iter()
            .filter_map(|(k, _)| m.get(k).map(|s| format!("{k} {}", s.formatted)))
            .collect();
        println!("{:<6} {}", m.method, cells.join(", "));
    }
    if agg.unconverged > 0 {
        println!("{} replications had unconverged fits", agg.unconverged);
    }
    write_json(
        &dir.join("aggregate.json"),
        &AggregateArtifact {
            schema: AGGREGATE_SCHEMA.into(),
            scenario,
            aggregate: agg,
        },
    )
}

fn generated_design(g: &DesignArgs, seed: u64) -> Result<DesignMatrix> {
    let family = g
        .family
        .ok_or_else(|| CliError::usage("give --family (or --design for a CSV)"))?;
    let p = g.p.ok_or_else(|| CliError::usage("give --p"))?;
    let n = match (family, g.n) {
        (FamilyArg::Identity, Some(n)) if n != p => {
            return Err(CliError::usage(format!(
                "the identity design needs n = p, got n = {n}, p = {p}"
            )))
        }
        (FamilyArg::Identity, _) => p,
        (_, Some(n)) => n,
        (_, None) => return Err(CliError::usage("give --n")),
    };
    if n == 0 || p == 0 {
        return Err(CliError::usage("--n and --p must be positive"));
    }
    let row_scaled = g.row_scaled.unwrap_or(false);
    let h = || g.h.ok_or_else(|| CliError::usage("this family needs --h"));
    let a = match family {
        FamilyArg::Identity => identity_design(p)?,
        FamilyArg::Band => band_design(n, p, h()?, seed)?,
        FamilyArg::Gaussian => {
            gaussian_design(n, p, CovarianceSpec::identity(p), seed, row_scaled)?
        }
        FamilyArg::GaussianBand => {
            gaussian_design(n, p, CovarianceSpec::band_taper(h()?, p), seed, row_scaled)?
        }
    };
    Ok(if row_scaled { a.into_row_scaled() } else { a })
}

fn cmd_ric(
    common: &CommonArgs,
    design: Option<&Path>,
    generated: &DesignArgs,
    ric: &RicArgs,
) -> Result<()> {
    let seed = common.seed.unwrap_or(0);
    let mut a = match design {
        Some(path) => io::read_design(path)?,
        None => generated_design(generated, seed)?,
    };
    if design.is_some() && generated.row_scaled.unwrap_or(false) {
        a = a.into_row_scaled();
    }
    let t = ric.t.unwrap_or(2.0);
    let samples = ric.samples.unwrap_or(1000);
    if !(t >= 0.0 && t.is_finite()) || samples == 0 {
        return Err(CliError::usage(
            "--t must be finite and nonnegative and --samples positive",
        ));
    }
    let mut cert = empirical_ric(
        &a.data,
        t,
        samples,
        derive_seed(seed, &[purpose::RIC_SAMPLE]),
    )?;
    if let Some(zeta) = ric.zeta {
        let margin = ric.margin.unwrap_or(0.1);
        if !(0.0..=1.0).contains(&zeta) || !(margin >= 0.0 && margin.is_finite()) {
            return Err(CliError::usage(
                "--zeta must lie in [0, 1] and --margin be nonnegative",
            ));
        }
        cert.check_interval(zeta, margin);
    }
    println!(
        "min ‖Ax‖ = {:.6}, max ‖Ax‖ = {:.6}{}",
        cert.min_norm,
        cert.max_norm,
        match cert.interval_ok {
            Some(true) => ", inside the interval",
            Some(false) => ", outside the interval",
            None => "",
        }
    );
    write_json(
        &out_dir(common).join("certificate.json"),
        &CertificateArtifact {
            schema: CERTIFICATE_SCHEMA.into(),
            design: DesignInfo::of(&a),
            seed,
            certificate: cert,
        },
    )
}

fn cmd_export(common: &CommonArgs, generated: &DesignArgs, export: &ExportArgs) -> Result<()> {
    let seed = common.seed.unwrap_or(0);
    let dir = out_dir(common);
    let Some(name) = &export.preset else {
        let a = generated_design(generated, seed)?;
        return io::write_matrix(&dir.join("design.csv"), &a.data);
    };
    let sim = SimulateArgs {
        preset: Some(name.clone()),
        sigma: export.sigma,
        n: generated.n,
        p: generated.p,
        row_scaled: generated.row_scaled,
        ..SimulateArgs::default()
    };
    let scenario = scenario_from(common, &sim, SolverArgs::default())?;
    let rep = export.rep.unwrap_or(0);
    let signal = scenario.signal()?;
    let (a, y) = scenario.generate(rep, &signal)?;
    io::write_matrix(&dir.join("design.csv"), &a.data)?;
    let mut resp = String::new();
    for v in &y {
        resp.push_str(&fmt_f64(*v));
        resp.push('\n');
    }
    io::write_file(&dir.join("response.csv"), resp.as_bytes())?;
    io::write_coefficients(&dir.join("truth.csv"), &signal.values)
}
