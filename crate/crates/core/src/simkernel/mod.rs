//! Exact path sampling, synthetic observations, and the truncated master
//! equation used as a ground-truth oracle.
//!
//! Randomness comes from `Xoshiro256PlusPlus` seeded through SplitMix64
//! (`SeedableRng::seed_from_u64`). Independent streams are derived as
//! `seed + stream index`.

mod master;
mod observe;
mod ssa;

pub use master::{master_evolve, master_moments, MasterOptions, TruncatedDistribution};
pub use observe::{observation_times, observe, ObservationSeries};
pub use ssa::{ssa_simulate, Path};

use crate::netmodel::NetError;
use crate::odecore::OdeError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("time {t} outside path span [{t0}, {t_end}]")]
    OutOfRange { t: f64, t0: f64, t_end: f64 },
    #[error("observation noise covariance is not symmetric positive definite")]
    NotSpd,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("truncation box too small: {mass_lost:e} probability leaked (cap {cap:e})")]
    BoxTooSmall { mass_lost: f64, cap: f64 },
    #[error("malformed CSV at line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

/// Formats a float with 17 significant digits, the precision used by every
/// CSV the crate writes.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn rng_for(seed: u64) -> rand_xoshiro::Xoshiro256PlusPlus {
    use rand::SeedableRng;
    rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(seed)
}
