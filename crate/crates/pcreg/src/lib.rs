// SPDX-License-Identifier: MIT OR Apache-2.0

//! File formats, the replication worker pool and the `pcreg` command line
//! on top of `pcreg-core`.

#![forbid(unsafe_code)]

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod runner;
pub mod svg;

pub use error::{CliError, Result};
