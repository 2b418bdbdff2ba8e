//! Exact simulation and approximate online filtering for stochastic reaction
//! networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`netmodel`] parses network definitions and exposes stoichiometry,
//!   mass-action propensities and their polynomial forms.
//! * [`odecore`] is the adaptive Dormand–Prince integrator every deterministic
//!   computation runs through.
//! * [`simkernel`] samples exact paths (Gillespie direct method), synthesizes
//!   noisy observations and integrates the truncated master equation.
//! * [`gaussmoments`] evaluates polynomial expectations under Gaussian laws.
//! * [`filters`] holds the Gaussian projection, quartic exponential projection
//!   and linear-noise filters behind one prediction/correction loop.
//! * [`closures`] has the normal and gamma moment-closure counterparts.
//! * [`bench`] runs the bistable and oscillator benchmarks and aggregates
//!   their MSE tables.
//! * [`cli`] is the `rnfilter` command-line front end.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod cli;
pub mod closures;
pub mod filters;
pub mod gaussmoments;
pub mod netmodel;
pub mod odecore;
pub mod simkernel;

pub use netmodel::{parse_network, ReactionNetwork};
