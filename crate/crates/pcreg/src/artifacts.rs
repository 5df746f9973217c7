// SPDX-License-Identifier: MIT OR Apache-2.0

//! JSON artifacts. Each carries a `schema` tag naming the versioned JSON
//! Schema in `schemas/` that it validates against.

use std::path::Path;

use pcreg_core::design::{DesignFamily, DesignMatrix};
use pcreg_core::postprocess::ChangePointReport;
use pcreg_core::ric::RicCertificate;
use pcreg_core::sim::{Aggregate, Scenario};
use pcreg_core::solver::EstimatorFit;
use pcreg_core::tuning::{CvResult, TauRule};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::{write_file, Standardisation};

pub const FIT_SCHEMA: &str = "pcreg.fit/1";
pub const REPORT_SCHEMA: &str = "pcreg.report/1";
pub const AGGREGATE_SCHEMA: &str = "pcreg.aggregate/1";
pub const CERTIFICATE_SCHEMA: &str = "pcreg.certificate/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    LeastSquares,
    FusedLasso,
    SparseFusedLasso,
    Constrained,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignInfo {
    pub family: DesignFamily,
    pub n: usize,
    pub p: usize,
    pub row_scaled: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl DesignInfo {
    pub fn of(a: &DesignMatrix) -> Self {
        Self {
            family: a.family,
            n: a.n(),
            p: a.p(),
            row_scaled: a.row_scaled,
            seed: a.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvInfo {
    pub folds: usize,
    pub grid_size: usize,
    pub grid_min_ratio: f64,
    pub result: CvResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitArtifact {
    pub schema: String,
    pub method: FitMethod,
    pub design: DesignInfo,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cv: Option<CvInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standardisation: Option<Standardisation>,
    pub fit: EstimatorFit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientSource {
    File,
    Fit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportArtifact {
    pub schema: String,
    pub p: usize,
    pub seed: u64,
    pub source: CoefficientSource,
    pub tau_rule: TauRule,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitArtifact>,
    pub report: ChangePointReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateArtifact {
    pub schema: String,
    pub scenario: Scenario,
    pub aggregate: Aggregate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateArtifact {
    pub schema: String,
    pub design: DesignInfo,
    pub seed: u64,
    pub certificate: RicCertificate,
}

pub fn to_json(value: &impl Serialize) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("artifacts serialise");
    out.push(b'\n');
    out
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    write_file(path, &to_json(value))
}
