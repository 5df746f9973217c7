// SPDX-License-Identifier: MIT OR Apache-2.0

//! Parallel replication runner.

use std::time::{Duration, Instant};

use pcreg_core::sim::{run_replication, ReplicationRecord, Scenario};
use rayon::prelude::*;

use crate::error::{CliError, Result};

pub struct Outcome {
    /// In replication order, whatever order they finished in.
    pub records: Vec<ReplicationRecord>,
    pub timings: Vec<Duration>,
}

/// Runs every replication of `scenario` on `workers` threads (0: one per
/// core). Each replication draws from its own seed stream, so the records
/// do not depend on the worker count.
pub fn run(scenario: &Scenario, workers: usize) -> Result<Outcome> {
    scenario.validate()?;
    let grid = scenario.shared_grid()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    let results: Vec<_> = pool.install(|| {
        (0..scenario.replications)
            .into_par_iter()
            .map(|r| {
                let t0 = Instant::now();
                let rec = run_replication(scenario, r, Some(&grid));
                (rec, t0.elapsed())
            })
            .collect()
    });
    let mut records = Vec::with_capacity(results.len());
    let mut timings = Vec::with_capacity(results.len());
    for (rec, t) in results {
        records.push(rec?);
        timings.push(t);
    }
    Ok(Outcome { records, timings })
}
