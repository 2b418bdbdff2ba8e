//! Benchmark harness: repeated simulate → observe → filter runs scored by
//! the time-averaged squared error of the MAP trail.

mod config;
mod runner;

pub use config::{ExperimentConfig, NetworkSource, X0Policy};
pub use runner::{
    run_bistable_experiment, run_experiment, run_limitcycle_experiment, CellReport, ExperimentReport, RunRecord, Sweep,
};

use crate::filters::{FilterError, FilteredTrajectory, TIME_SNAP};
use crate::netmodel::NetError;
use crate::simkernel::{Path, SimError};
use rand::RngCore;
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("time spans differ: path [{0}, {1}], estimate [{2}, {3}]")]
    SpanMismatch(f64, f64, f64, f64),
}

/// Seed of stream `parts` under `base`; distinct part lists give
/// independent SplitMix64 outputs.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(SplitMix64::seed_from_u64(base).next_u64(), |acc, &p| {
            SplitMix64::seed_from_u64(acc ^ SplitMix64::seed_from_u64(p).next_u64()).next_u64()
        })
}

/// `(1/T) ∫ |x(t) − x̂(t)|² dt` over the path's span, with the truth exact
/// between jumps and the estimate linear between its grid points. Each
/// piece has a linear error, integrated exactly.
pub fn mse(truth: &Path, estimate: &FilteredTrajectory) -> Result<f64, BenchError> {
    let (t0, t1) = (truth.t0(), truth.t_end());
    let times = &estimate.times;
    let mismatch = || BenchError::SpanMismatch(t0, t1, times[0], times[times.len() - 1]);
    if times.len() < 2 || (times[0] - t0).abs() > TIME_SNAP || (times[times.len() - 1] - t1).abs() > TIME_SNAP {
        return Err(if times.is_empty() {
            BenchError::SpanMismatch(t0, t1, f64::NAN, f64::NAN)
        } else {
            mismatch()
        });
    }
    let n = truth.n_species();
    if estimate.map.iter().any(|m| m.len() != n) {
        return Err(BenchError::Invalid("estimate dimension differs from the path".into()));
    }
    let jumps = truth.times();
    let mut k = 0;
    let mut total = 0.0;
    for g in 0..times.len() - 1 {
        let (ga, gb) = (times[g], times[g + 1]);
        let (ea, eb) = (&estimate.map[g], &estimate.map[g + 1]);
        let at = |t: f64, i: usize| ea[i] + (eb[i] - ea[i]) * (t - ga) / (gb - ga);
        let mut a = ga;
        while a < gb {
            while k + 1 < jumps.len() && jumps[k + 1] <= a {
                k += 1;
            }
            let b = if k + 1 < jumps.len() { jumps[k + 1].min(gb) } else { gb };
            let x = truth.state(k);
            let mut piece = 0.0;
            for i in 0..n {
                let da = x[i] as f64 - at(a, i);
                let db = x[i] as f64 - at(b, i);
                piece += da * da + da * db + db * db;
            }
            total += (b - a) * piece / 3.0;
            a = b;
        }
    }
    Ok(total / (t1 - t0))
}
