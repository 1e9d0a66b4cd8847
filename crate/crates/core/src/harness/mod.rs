//! Deterministic experiment runner.
//!
//! Every (experiment, grid point, seed) triple owns an independent ChaCha
//! stream, and results are collected in (grid, seed) order, so outputs do
//! not depend on the number of worker threads.

mod config;
mod experiments;
mod output;
mod run;

pub use config::{
    parse_seeds, BoundsConfig, EstimatorSpec, ExperimentConfig, ExperimentKind, Grid, GridParam,
    ProblemSpec, RegionSpec,
};
pub use experiments::{
    aliasing, bounds_report, full_traces, run_sharded, train_toy, validate_adaptive, validate_carry,
    validate_regret, AliasingReport, CarryRow, RegretRow, ShardMode, ShardedRow, ToyRow,
    ToySummaryRow,
};
pub use output::{Cell, Table};
pub use run::{run_trajectory, RunOptions, RunSummary, RunTrace, TraceRow};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Nearest-rank percentile: sort ascending, take index `ceil(q·n) - 1`.
pub fn percentile(samples: &[f64], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("percentile samples"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("quantile must lie in [0, 1], got {q}")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (q * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.saturating_sub(1)])
}

/// `1, 2, 4, …` up to `horizon`, plus `horizon` itself.
pub fn geometric_checkpoints(horizon: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut t = 1u64;
    while t <= horizon {
        out.push(t);
        t = match t.checked_mul(2) {
            Some(next) => next,
            None => break,
        };
    }
    if out.last() != Some(&horizon) && horizon > 0 {
        out.push(horizon);
    }
    out
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Random stream for one trajectory, keyed by experiment, grid point and seed.
pub fn trajectory_rng(experiment: &str, grid_point: u64, seed: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&fnv1a(experiment).to_le_bytes());
    key[8..16].copy_from_slice(&grid_point.to_le_bytes());
    key[16..24].copy_from_slice(&seed.to_le_bytes());
    key[24..].copy_from_slice(b"uclip/v1");
    ChaCha8Rng::from_seed(key)
}
