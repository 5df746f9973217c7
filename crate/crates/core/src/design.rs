// SPDX-License-Identifier: MIT OR Apache-2.0

//! Design matrices used by the simulations, plus a wrapper for external data.
//!
//! The four generated families are the identity, random band matrices, and
//! Gaussian designs whose rows are drawn from `N(0, Σ)` with `Σ` either the
//! identity or a Bartlett taper of bandwidth `h`. All generators are
//! deterministic given their seed.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
#[allow(unused_imports)] // unused when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{seed, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignFamily {
    Identity,
    Band { h: usize },
    GaussianIdentity,
    GaussianBandCov { h: usize },
    External,
}

impl DesignFamily {
    pub fn is_random(&self) -> bool {
        matches!(
            self,
            Self::Band { .. } | Self::GaussianIdentity | Self::GaussianBandCov { .. }
        )
    }
}

/// Row covariance of a Gaussian design.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceKind {
    Identity,
    /// `Σ_ij = max(0, 1 - |i - j| / (h + 1))`.
    BandTaper {
        h: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub kind: CovarianceKind,
    pub p: usize,
}

impl CovarianceSpec {
    pub fn identity(p: usize) -> Self {
        Self {
            kind: CovarianceKind::Identity,
            p,
        }
    }

    pub fn band_taper(h: usize, p: usize) -> Self {
        Self {
            kind: CovarianceKind::BandTaper { h },
            p,
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match self.kind {
            CovarianceKind::Identity => {
                if i == j {
                    1.0
                } else {
                    0.0
                }
            }
            CovarianceKind::BandTaper { h } => {
                let d = i.abs_diff(j) as f64;
                (1.0 - d / (h as f64 + 1.0)).max(0.0)
            }
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.p, self.p, |i, j| self.entry(i, j))
    }

    /// Symmetric square root via eigen-decomposition, with negative
    /// eigenvalues clamped to zero.
    pub fn sqrt(&self) -> Result<DMatrix<f64>> {
        if matches!(self.kind, CovarianceKind::Identity) {
            return Ok(DMatrix::identity(self.p, self.p));
        }
        let eig = SymmetricEigen::try_new(self.matrix(), 1e-14, 0)
            .ok_or_else(|| Error::Numeric("eigen-decomposition did not converge".into()))?;
        let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let q = &eig.eigenvectors;
        Ok(q * DMatrix::from_diagonal(&root) * q.transpose())
    }
}

/// A dense `n x p` design matrix with provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    pub data: DMatrix<f64>,
    pub family: DesignFamily,
    pub seed: Option<u64>,
    /// Rows carry the `n^{-1/2}` factor.
    pub row_scaled: bool,
}

impl DesignMatrix {
    pub fn external(data: DMatrix<f64>) -> Self {
        Self {
            data,
            family: DesignFamily::External,
            seed: None,
            row_scaled: false,
        }
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.family, DesignFamily::Identity)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(x);
        (&self.data * x).as_slice().to_vec()
    }

    /// Rows selected by `rows`, tagged as external data.
    pub fn select_rows(&self, rows: &[usize]) -> DesignMatrix {
        DesignMatrix {
            data: self.data.select_rows(rows.iter()),
            family: DesignFamily::External,
            seed: self.seed,
            row_scaled: self.row_scaled,
        }
    }

    /// Multiplies every entry by `n^{-1/2}` and marks the matrix row-scaled.
    pub fn into_row_scaled(mut self) -> Self {
        if !self.row_scaled {
            let f = 1.0 / (self.n() as f64).sqrt();
            self.data *= f;
            self.row_scaled = true;
        }
        self
    }
}

pub fn identity_design(p: usize) -> Result<DesignMatrix> {
    if p == 0 {
        return Err(Error::param("p must be positive"));
    }
    Ok(DesignMatrix {
        data: DMatrix::identity(p, p),
        family: DesignFamily::Identity,
        seed: None,
        row_scaled: false,
    })
}

/// Entries i.i.d. `N(0, 1)` where `|i - j| <= h`, exactly zero elsewhere.
pub fn band_design(n: usize, p: usize, h: usize, seed: u64) -> Result<DesignMatrix> {
    check_dims(n, p)?;
    let mut rng = seed::rng_for(seed, &[seed::purpose::DESIGN]);
    let mut data = DMatrix::zeros(n, p);
    for i in 0..n {
        let lo = i.saturating_sub(h);
        let hi = (i + h).min(p.saturating_sub(1));
        for j in lo..=hi {
            if j < p {
                data[(i, j)] = rng.sample(StandardNormal);
            }
        }
    }
    Ok(DesignMatrix {
        data,
        family: DesignFamily::Band { h },
        seed: Some(seed),
        row_scaled: false,
    })
}

/// Rows i.i.d. `N(0, Σ)`, generated as `Σ^{1/2} z`.
pub fn gaussian_design(
    n: usize,
    p: usize,
    cov: CovarianceSpec,
    seed: u64,
    row_scaled: bool,
) -> Result<DesignMatrix> {
    check_dims(n, p)?;
    if cov.p != p {
        return Err(Error::dim(format!(
            "covariance is {0}x{0} but p = {p}",
            cov.p
        )));
    }
    let mut rng = seed::rng_for(seed, &[seed::purpose::DESIGN]);
    // Row-major draw so that a given seed yields the same rows regardless of n.
    let z = DMatrix::from_row_iterator(
        n,
        p,
        (0..n * p).map(|_| rng.sample::<f64, _>(StandardNormal)),
    );
    let (data, family) = match cov.kind {
        CovarianceKind::Identity => (z, DesignFamily::GaussianIdentity),
        CovarianceKind::BandTaper { h } => {
            let root = cov.sqrt()?;
            (z * root, DesignFamily::GaussianBandCov { h })
        }
    };
    let design = DesignMatrix {
        data,
        family,
        seed: Some(seed),
        row_scaled: false,
    };
    Ok(if row_scaled {
        design.into_row_scaled()
    } else {
        design
    })
}

fn check_dims(n: usize, p: usize) -> Result<()> {
    if n == 0 || p == 0 {
        return Err(Error::param(format!(
            "design dimensions must be positive, got {n}x{p}"
        )));
    }
    Ok(())
}
