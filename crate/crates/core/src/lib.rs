// SPDX-License-Identifier: MIT OR Apache-2.0

//! Estimation and change-point localisation for regression models whose
//! coefficient vector is piecewise constant along its index.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every numerical
//! piece of the pipeline:
//!
//! * [`signal`]: difference operator, total variation, change-point sets and
//!   piecewise-constant signals with their minimal spacing and jump.
//! * [`design`]: seeded generators for identity, band and Gaussian designs.
//! * [`solver`]: exact 1-D fused lasso, an active-set method and ADMM for
//!   general designs (with and without an extra ℓ₁ penalty) and the
//!   TV-constrained estimator.
//! * [`postprocess`]: mean filter and time filter refinement of the raw
//!   change points of a fit.
//! * [`tuning`]: cross-validation, bandwidth/gap defaults and permutation
//!   thresholds.
//! * [`metrics`]: Hausdorff distances and per-replication evaluation.
//! * [`ric`]: empirical restricted-isometry envelopes over TV balls.
//! * [`sim`]: simulation scenarios, single replications and aggregation.
//!
//! File formats, the replication worker pool and the command line live in
//! the companion `pcreg` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod design;
mod error;
pub mod metrics;
pub mod postprocess;
pub mod ric;
pub mod seed;
pub mod signal;
pub mod sim;
pub mod solver;
pub mod tuning;

pub use error::{Error, Result};
