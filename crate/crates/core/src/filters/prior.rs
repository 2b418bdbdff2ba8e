//! Rate-equation summaries used to place initial states and filter priors.

use crate::netmodel::ReactionNetwork;
use crate::odecore::{integrate, OdeError, StepControl};

/// Rate-equation burn-in applied before reading off an attractor.
pub const DEFAULT_BURN_IN: f64 = 50.0;

fn rate_equation(
    net: &ReactionNetwork,
) -> impl FnMut(f64, &[f64], &mut [f64]) -> Result<(), crate::odecore::RhsError> + '_ {
    let polys = net.limit_propensity_polynomials();
    move |_, z, dz| {
        let h: Vec<f64> = polys.iter().map(|p| p.eval(z)).collect();
        dz.copy_from_slice(&net.apply_net_effect(&h));
        Ok(())
    }
}

/// Concentration `z(t)` of the rate equation started from `z0`.
pub fn rate_equation_state(net: &ReactionNetwork, z0: &[f64], t: f64) -> Result<Vec<f64>, OdeError> {
    let (z, _) = integrate(rate_equation(net), z0, 0.0, t, &StepControl::with_tolerance(1e-10), &[])?;
    Ok(z)
}

/// Time average of the rate equation over `[burn_in, burn_in + window]`,
/// started from `z = (1, …, 1)`; a fixed point for a stable equilibrium,
/// the orbit average for a limit cycle.
pub fn attractor_average(net: &ReactionNetwork, burn_in: f64, window: f64) -> Result<Vec<f64>, OdeError> {
    let n = net.n_species();
    let z_burn = rate_equation_state(net, &vec![1.0; n], burn_in)?;
    let samples = 2000;
    let grid: Vec<f64> = (0..=samples).map(|k| window * k as f64 / samples as f64).collect();
    let (_, trail) = integrate(
        rate_equation(net),
        &z_burn,
        0.0,
        window,
        &StepControl::with_tolerance(1e-10),
        &grid,
    )?;
    let mut avg = vec![0.0; n];
    // trapezoid weights on the uniform sample grid
    for (k, z) in trail.states.iter().enumerate() {
        let w = if k == 0 || k == samples { 0.5 } else { 1.0 };
        for i in 0..n {
            avg[i] += w * z[i];
        }
    }
    Ok(avg.into_iter().map(|v| v / samples as f64).collect())
}

/// Initial counts `round(Ω·z(burn_in))` from `z(0) = (1, …, 1)`.
pub fn auto_initial_state(net: &ReactionNetwork, burn_in: f64) -> Result<Vec<i64>, OdeError> {
    let z = rate_equation_state(net, &vec![1.0; net.n_species()], burn_in)?;
    Ok(z.iter().map(|v| (v * net.omega()).round().max(0.0) as i64).collect())
}
