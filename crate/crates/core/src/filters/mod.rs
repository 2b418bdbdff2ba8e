//! Approximate filters for partially observed reaction networks.
//!
//! All three filters share one loop: integrate the prediction ODE up to the
//! next observation time, then apply the kind's correction.
//!
//! * GPF (Gaussian projection) and LNA run in counts on `(μ, vec Q)`.
//! * QPF (quartic exponential projection) runs in concentrations `z = x/Ω`
//!   on the natural parameters θ; raw counts would put `θ₄x⁴` far outside
//!   floating-point range. Its MAP estimate is reported in counts.
//!
//! Between observations the MAP trail follows the predicted density; from
//! an observation time on it uses the corrected one.

pub mod gaussian;
pub mod prior;
pub mod quadrature;
pub mod quartic;

pub use gaussian::{gaussian_map, gpf_drift, kalman_correct, lna_drift, GaussianModel};
pub use prior::{attractor_average, auto_initial_state, rate_equation_state, DEFAULT_BURN_IN};
pub use quartic::{
    quartic_base_integrals, quartic_correct, quartic_drift, quartic_expect_lc, quartic_fisher, quartic_map,
    quartic_moment_recursion, BaseIntegrals, FisherMatrix, QuarticError, QuarticModel, QuarticState,
};

use crate::gaussmoments::{GaussError, GaussianState};
use crate::netmodel::ReactionNetwork;
use crate::odecore::{integrate, OdeError, RhsError, StepControl};
use crate::simkernel::{fmt17, ObservationSeries};
use nalgebra::{DMatrix, DVector};
use std::fmt::Write as _;
use std::str::FromStr;
use thiserror::Error;

/// Default relative and absolute tolerance of the prediction ODE.
pub const DEFAULT_FILTER_TOL: f64 = 1e-6;
/// Snap distance between output-grid points and observation times.
pub const TIME_SNAP: f64 = 1e-9;
/// Initial θ₄ of the default quartic prior (concentration units).
pub const QPF_PRIOR_QUARTIC: f64 = -1e-4;
/// QPF step budget per unit of prediction time (at least one unit is
/// granted). A quartic density leaving the family crawls with ever smaller
/// accepted steps; exhausting the budget is reported as divergence.
pub const QPF_STEPS_PER_UNIT: usize = 2000;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error(transparent)]
    Gauss(#[from] GaussError),
    #[error(transparent)]
    Quartic(#[from] QuarticError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("innovation covariance is singular")]
    SingularInnovation,
    #[error("QPF is univariate only; network has {0} species")]
    NotUnivariate(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("filter diverged at t = {t}: {reason}")]
    Diverged { t: f64, reason: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FilterKind {
    Gpf,
    Qpf,
    Lna,
}

impl FilterKind {
    pub const ALL: [FilterKind; 3] = [FilterKind::Gpf, FilterKind::Qpf, FilterKind::Lna];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Gpf => "GPF",
            FilterKind::Qpf => "QPF",
            FilterKind::Lna => "LNA",
        }
    }
}

impl std::fmt::Display for FilterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = FilterError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gpf" => Ok(FilterKind::Gpf),
            "qpf" => Ok(FilterKind::Qpf),
            "lna" => Ok(FilterKind::Lna),
            other => Err(FilterError::Invalid(format!("unknown filter kind '{other}'"))),
        }
    }
}

/// Prior at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterInit {
    /// Mean and covariance in counts.
    Gaussian(GaussianState),
    /// Natural parameters in concentration units.
    Quartic([f64; 4]),
}

impl FilterInit {
    /// Default prior built from the first observation.
    ///
    /// Gaussian kinds lift `y₁` through `G⁺` and fill unobserved directions
    /// with `Ω·z_ref` (the rate-equation attractor average) and variance Ω.
    /// QPF starts near-Gaussian around `y₁/(GΩ)` with variance `V/Ω² + 1`.
    pub fn default_for(net: &ReactionNetwork, kind: FilterKind, obs: &ObservationSeries) -> Result<Self, FilterError> {
        let y1 = obs
            .values
            .first()
            .ok_or_else(|| FilterError::Invalid("a default prior needs at least one observation".into()))?;
        let omega = net.omega();
        match kind {
            FilterKind::Qpf => {
                check_univariate(net, obs)?;
                let g = obs.g[(0, 0)];
                let mu0 = y1[0] / (g * omega);
                let var0 = obs.v[(0, 0)] / (omega * omega) + 1.0;
                Ok(FilterInit::Quartic([mu0 / var0, -0.5 / var0, 0.0, QPF_PRIOR_QUARTIC]))
            }
            FilterKind::Gpf | FilterKind::Lna => {
                let n = net.n_species();
                let z_ref = attractor_average(net, DEFAULT_BURN_IN, DEFAULT_BURN_IN)?;
                let mu_ref = DVector::from_iterator(n, z_ref.iter().map(|z| z * omega));
                let g_pinv = obs
                    .g
                    .clone()
                    .pseudo_inverse(1e-12)
                    .map_err(|e| FilterError::Invalid(e.to_string()))?;
                let unobserved = DMatrix::identity(n, n) - &g_pinv * &obs.g;
                let mean = &g_pinv * y1 + &unobserved * mu_ref;
                let cov = &g_pinv * &obs.v * g_pinv.transpose() + &unobserved * omega;
                let cov = 0.5 * (&cov + cov.transpose());
                Ok(FilterInit::Gaussian(GaussianState::new(mean, cov)?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSettings {
    pub ctrl: StepControl,
    /// Spacing of the output grid.
    pub out_dt: f64,
    pub t0: f64,
    /// End of the output grid; the last observation time when `None`.
    pub t_end: Option<f64>,
}

impl Default for FilterSettings {
    fn default() -> Self {
        Self {
            ctrl: StepControl::with_tolerance(DEFAULT_FILTER_TOL),
            out_dt: 0.01,
            t0: 0.0,
            t_end: None,
        }
    }
}

/// Filter output on the uniform output grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredTrajectory {
    pub kind: FilterKind,
    pub times: Vec<f64>,
    /// MAP estimate in counts.
    pub map: Vec<Vec<f64>>,
    /// `(μ, vec Q)` for Gaussian kinds, θ for QPF.
    pub params: Vec<Vec<f64>>,
    /// Observation time and the corrected parameters there.
    pub corrected: Vec<(f64, Vec<f64>)>,
}

impl FilteredTrajectory {
    /// CSV with header `t,map_1..map_n,param_1..param_p`.
    pub fn to_csv(&self) -> String {
        let n = self.map.first().map_or(0, Vec::len);
        let p = self.params.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        for i in 1..=n {
            let _ = write!(out, ",map_{i}");
        }
        for i in 1..=p {
            let _ = write!(out, ",param_{i}");
        }
        out.push('\n');
        for k in 0..self.times.len() {
            out.push_str(&fmt17(self.times[k]));
            for v in self.map[k].iter().chain(&self.params[k]) {
                out.push(',');
                out.push_str(&fmt17(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// Grid `t0 + kΔ`, `k = 0..=⌊(t_end - t0)/Δ⌋`.
pub fn output_grid(t0: f64, t_end: f64, dt: f64) -> Vec<f64> {
    let count = ((t_end - t0) / dt + TIME_SNAP).floor().max(0.0) as usize;
    (0..=count).map(|k| t0 + k as f64 * dt).collect()
}

fn check_univariate(net: &ReactionNetwork, obs: &ObservationSeries) -> Result<(), FilterError> {
    if net.n_species() != 1 || obs.dim() != 1 {
        return Err(FilterError::NotUnivariate(net.n_species()));
    }
    Ok(())
}

enum Engine {
    Gpf(GaussianModel),
    Lna(GaussianModel),
    Qpf(QuarticModel),
}

impl Engine {
    fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<(), RhsError> {
        match self {
            Engine::Gpf(m) | Engine::Lna(m) => {
                let n = m.n_species();
                let st = GaussianState::from_slice(n, y);
                let (dmu, dq) = match self {
                    Engine::Gpf(_) => m.gpf(&st).map_err(|e| RhsError(e.to_string()))?,
                    _ => m.lna(&st),
                };
                dy[..n].copy_from_slice(dmu.as_slice());
                dy[n..].copy_from_slice(dq.as_slice());
                Ok(())
            }
            Engine::Qpf(m) => {
                let theta = [y[0], y[1], y[2], y[3]];
                let st = QuarticState::new(theta).map_err(|e| RhsError(e.to_string()))?;
                let d = quartic_drift(m, &st).map_err(|e| RhsError(e.to_string()))?;
                dy.copy_from_slice(&d);
                Ok(())
            }
        }
    }

    fn correct(
        &self,
        y: &[f64],
        obs: &ObservationSeries,
        value: &DVector<f64>,
        omega: f64,
    ) -> Result<Vec<f64>, FilterError> {
        match self {
            Engine::Gpf(m) | Engine::Lna(m) => {
                let st = GaussianState::from_slice(m.n_species(), y);
                Ok(kalman_correct(&st, value, &obs.g, &obs.v)?.to_vec())
            }
            Engine::Qpf(_) => {
                let theta = [y[0], y[1], y[2], y[3]];
                let corrected = quartic::quartic_correct_theta(
                    theta,
                    value[0] / omega,
                    obs.g[(0, 0)],
                    obs.v[(0, 0)] / (omega * omega),
                );
                Ok(corrected.to_vec())
            }
        }
    }

    fn map(&self, y: &[f64], omega: f64) -> Vec<f64> {
        match self {
            Engine::Gpf(m) | Engine::Lna(m) => y[..m.n_species()].to_vec(),
            Engine::Qpf(_) => vec![quartic_map([y[0], y[1], y[2], y[3]]) * omega],
        }
    }

    /// Integrates over `[t, t1]`; one retry at half tolerance, then divergence.
    fn predict(
        &self,
        y: &[f64],
        t: f64,
        t1: f64,
        ctrl: &StepControl,
        pts: &[f64],
    ) -> Result<(Vec<f64>, Vec<Vec<f64>>), FilterError> {
        let mut ctrl = *ctrl;
        if let Engine::Qpf(_) = self {
            let budget = QPF_STEPS_PER_UNIT * (t1 - t).ceil().max(1.0) as usize;
            ctrl.max_steps = ctrl.max_steps.min(budget);
        }
        let ctrl = &ctrl;
        let run = |c: &StepControl| integrate(|_, y: &[f64], dy: &mut [f64]| self.rhs(y, dy), y, t, t1, c, pts);
        match run(ctrl).or_else(|_| run(&ctrl.scaled(0.5))) {
            Ok((y, trail)) => Ok((y, trail.states)),
            Err(e) => Err(FilterError::Diverged {
                t,
                reason: e.to_string(),
            }),
        }
    }
}

/// Runs one filter over `obs`.
pub fn run_filter(
    net: &ReactionNetwork,
    kind: FilterKind,
    obs: &ObservationSeries,
    init: &FilterInit,
    settings: &FilterSettings,
) -> Result<FilteredTrajectory, FilterError> {
    let n = net.n_species();
    if obs.g.ncols() != n {
        return Err(FilterError::Dimension(format!(
            "G has {} columns, network has {n} species",
            obs.g.ncols()
        )));
    }
    let omega = net.omega();
    let (engine, y0) = match (kind, init) {
        (FilterKind::Qpf, FilterInit::Quartic(theta)) => {
            check_univariate(net, obs)?;
            QuarticState::new(*theta)?;
            (Engine::Qpf(QuarticModel::concentration(net)?), theta.to_vec())
        }
        (FilterKind::Qpf, _) => {
            check_univariate(net, obs)?;
            return Err(FilterError::Invalid("QPF needs a quartic prior".into()));
        }
        (FilterKind::Gpf | FilterKind::Lna, FilterInit::Gaussian(st)) => {
            if st.dim() != n {
                return Err(FilterError::Dimension(
                    "prior dimension differs from species count".into(),
                ));
            }
            let model = GaussianModel::counts(net);
            let engine = if kind == FilterKind::Gpf {
                Engine::Gpf(model)
            } else {
                Engine::Lna(model)
            };
            (engine, st.to_vec())
        }
        _ => return Err(FilterError::Invalid(format!("{kind} needs a Gaussian prior"))),
    };

    let t0 = settings.t0;
    let t_end = settings
        .t_end
        .unwrap_or_else(|| obs.times.last().copied().unwrap_or(t0));
    if obs.times.iter().any(|&t| t < t0 - TIME_SNAP || t > t_end + TIME_SNAP) {
        return Err(FilterError::Invalid("observation times must lie in [t0, t_end]".into()));
    }
    if !(settings.out_dt > 0.0) {
        return Err(FilterError::Invalid("output spacing must be positive".into()));
    }
    let grid = output_grid(t0, t_end, settings.out_dt);
    let mut out = FilteredTrajectory {
        kind,
        times: Vec::with_capacity(grid.len()),
        map: Vec::with_capacity(grid.len()),
        params: Vec::with_capacity(grid.len()),
        corrected: Vec::with_capacity(obs.len()),
    };
    let record = |out: &mut FilteredTrajectory, g: f64, y: &[f64]| {
        out.times.push(g);
        out.map.push(engine.map(y, omega));
        out.params.push(y.to_vec());
    };

    let mut y = y0;
    let mut t = t0;
    let mut next = 0;
    // grid points at t0 hold the prior unless an observation sits there
    let first_obs = obs.times.first().copied().unwrap_or(f64::INFINITY);
    if (first_obs - t0).abs() > TIME_SNAP {
        while next < grid.len() && grid[next] <= t0 + TIME_SNAP {
            record(&mut out, grid[next], &y);
            next += 1;
        }
    }

    for (ti, value) in obs.times.iter().copied().zip(&obs.values) {
        let end = next + grid[next..].partition_point(|&g| g < ti - TIME_SNAP);
        if ti > t {
            let pts: Vec<f64> = grid[next..end].iter().map(|&g| g.clamp(t, ti)).collect();
            let (y_new, states) = engine.predict(&y, t, ti, &settings.ctrl, &pts)?;
            for (k, s) in states.iter().enumerate() {
                record(&mut out, grid[next + k], s);
            }
            y = y_new;
            t = ti;
        }
        next = end;
        y = engine.correct(&y, obs, value, omega)?;
        out.corrected.push((ti, y.clone()));
        while next < grid.len() && grid[next] <= ti + TIME_SNAP {
            record(&mut out, grid[next], &y);
            next += 1;
        }
    }

    if next < grid.len() {
        let pts: Vec<f64> = grid[next..].iter().map(|&g| g.clamp(t, t_end)).collect();
        let (_, states) = engine.predict(&y, t, t_end, &settings.ctrl, &pts)?;
        for (k, s) in states.iter().enumerate() {
            record(&mut out, grid[next + k], s);
        }
    }
    Ok(out)
}
