//! Adaptive Dormand–Prince 5(4) integration with PI step-size control and
//! cubic Hermite dense output.
//!
//! Every deterministic evolution in the crate (rate equations, the truncated
//! master equation, all filter prediction steps) goes through [`integrate`].

use thiserror::Error;

/// Failure reported by a right-hand side, e.g. a density that stopped being
/// normalizable. Inside a trial step it makes the integrator shrink `h`.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct RhsError(pub String);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("maximum number of steps ({0}) exceeded")]
    MaxSteps(usize),
    #[error("non-finite derivative at t = {t}")]
    NonFiniteRhs { t: f64 },
    #[error("right-hand side failed at t = {t}: {source}")]
    Rhs { t: f64, source: RhsError },
    #[error("invalid integration request: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// First trial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            h_init: None,
            h_min: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 5_000_000,
        }
    }
}

impl StepControl {
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: tol,
            ..Self::default()
        }
    }

    /// Same control with both tolerances scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            ..*self
        }
    }

    fn validate(&self) -> Result<(), OdeError> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(OdeError::Invalid("tolerances must be positive".into()));
        }
        if let Some(h) = self.h_init {
            if !(h > self.h_min) {
                return Err(OdeError::Invalid("h_init must exceed h_min".into()));
            }
        }
        Ok(())
    }
}

/// States sampled on a caller-supplied output grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DenseTrail {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// error coefficients: fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// PI controller constants (Hairer & Wanner's DOPRI5 defaults)
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - BETA * 0.75;

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
            err: vec![0.0; n],
        }
    }
}

fn eval<F>(rhs: &mut F, t: f64, y: &[f64], out: &mut [f64], stats: &mut IntegrationStats) -> Result<bool, RhsError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), RhsError>,
{
    stats.rhs_evals += 1;
    rhs(t, y, out)?;
    Ok(out.iter().all(|v| v.is_finite()))
}

enum Trial {
    Done,
    Failed,
}

/// One Dormand–Prince step from `(t, y)` with `k[0] = f(t, y)` already set.
/// Leaves the fifth-order solution in `y_new`, its derivative in `k[6]` and
/// the local error estimate in `err`.
fn dp_step<F>(rhs: &mut F, t: f64, y: &[f64], h: f64, s: &mut Stages, stats: &mut IntegrationStats) -> Trial
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), RhsError>,
{
    let n = y.len();
    macro_rules! stage {
        ($dst:expr, $c:expr, [$(($a:expr, $src:expr)),*]) => {{
            for i in 0..n {
                s.tmp[i] = y[i] + h * (0.0 $(+ $a * s.k[$src][i])*);
            }
            let (head, tail) = s.k.split_at_mut($dst);
            let _ = head;
            match eval(rhs, t + $c * h, &s.tmp, &mut tail[0], stats) {
                Ok(true) => {}
                _ => return Trial::Failed,
            }
        }};
    }
    stage!(1, C2, [(A21, 0)]);
    stage!(2, C3, [(A31, 0), (A32, 1)]);
    stage!(3, C4, [(A41, 0), (A42, 1), (A43, 2)]);
    stage!(4, C5, [(A51, 0), (A52, 1), (A53, 2), (A54, 3)]);
    stage!(5, 1.0, [(A61, 0), (A62, 1), (A63, 2), (A64, 3), (A65, 4)]);
    for i in 0..n {
        s.y_new[i] =
            y[i] + h * (A71 * s.k[0][i] + A73 * s.k[2][i] + A74 * s.k[3][i] + A75 * s.k[4][i] + A76 * s.k[5][i]);
    }
    let (head, tail) = s.k.split_at_mut(6);
    let _ = head;
    match eval(rhs, t + h, &s.y_new, &mut tail[0], stats) {
        Ok(true) => {}
        _ => return Trial::Failed,
    }
    for i in 0..n {
        s.err[i] =
            h * (E1 * s.k[0][i] + E3 * s.k[2][i] + E4 * s.k[3][i] + E5 * s.k[4][i] + E6 * s.k[5][i] + E7 * s.k[6][i]);
    }
    Trial::Done
}

fn error_norm(y: &[f64], y_new: &[f64], err: &[f64], ctrl: &StepControl) -> f64 {
    let n = y.len().max(1) as f64;
    let sum: f64 = y
        .iter()
        .zip(y_new)
        .zip(err)
        .map(|((a, b), e)| {
            let sc = ctrl.abs_tol + ctrl.rel_tol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn initial_step<F>(
    rhs: &mut F,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    span: f64,
    ctrl: &StepControl,
    stats: &mut IntegrationStats,
) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), RhsError>,
{
    // Hairer–Nørsett–Wanner starting step heuristic
    let n = y0.len().max(1) as f64;
    let sc: Vec<f64> = y0.iter().map(|y| ctrl.abs_tol + ctrl.rel_tol * y.abs()).collect();
    let d0 = (y0.iter().zip(&sc).map(|(y, s)| (y / s).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().zip(&sc).map(|(f, s)| (f / s).powi(2)).sum::<f64>() / n).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span).min(ctrl.h_max);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; y0.len()];
    let ok = matches!(eval(rhs, t0 + h0, &y1, &mut f1, stats), Ok(true));
    if !ok {
        return (h0 * 0.01).max(ctrl.h_min * 10.0);
    }
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(&sc)
        .map(|((a, b), s)| ((a - b) / s).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(span).min(ctrl.h_max)
}

fn hermite(t0: f64, y0: &[f64], f0: &[f64], h: f64, y1: &[f64], f1: &[f64], t: f64) -> Vec<f64> {
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
        .collect()
}

/// Integrates `dy/dt = rhs(t, y)` from `t0` to `t1`.
///
/// Returns `y(t1)` and the solution sampled at every grid time in
/// `[t0, t1]` (grid times outside the span are skipped). The grid must be
/// sorted ascending.
pub fn integrate<F>(
    rhs: F,
    y0: &[f64],
    t0: f64,
    t1: f64,
    ctrl: &StepControl,
    out_grid: &[f64],
) -> Result<(Vec<f64>, DenseTrail), OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), RhsError>,
{
    integrate_with_stats(rhs, y0, t0, t1, ctrl, out_grid).map(|(y, trail, _)| (y, trail))
}

pub fn integrate_with_stats<F>(
    mut rhs: F,
    y0: &[f64],
    t0: f64,
    t1: f64,
    ctrl: &StepControl,
    out_grid: &[f64],
) -> Result<(Vec<f64>, DenseTrail, IntegrationStats), OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), RhsError>,
{
    ctrl.validate()?;
    if !(t1 >= t0) {
        return Err(OdeError::Invalid(format!("t1 = {t1} precedes t0 = {t0}")));
    }
    let n = y0.len();
    let mut stats = IntegrationStats::default();
    let mut trail = DenseTrail::default();
    let mut grid = out_grid.iter().copied().filter(|&g| g >= t0 && g <= t1).peekable();

    let mut y = y0.to_vec();
    let mut s = Stages::new(n);
    match eval(&mut rhs, t0, &y, &mut s.k[0], &mut stats) {
        Ok(true) => {}
        Ok(false) => return Err(OdeError::NonFiniteRhs { t: t0 }),
        Err(source) => return Err(OdeError::Rhs { t: t0, source }),
    }

    while let Some(&g) = grid.peek() {
        if g > t0 {
            break;
        }
        trail.times.push(g);
        trail.states.push(y.clone());
        grid.next();
    }

    let span = t1 - t0;
    if span == 0.0 {
        return Ok((y, trail, stats));
    }

    let mut t = t0;
    let mut h = match ctrl.h_init {
        Some(h) => h.min(span),
        None => {
            let f0 = s.k[0].clone();
            initial_step(&mut rhs, t0, &y, &f0, span, ctrl, &mut stats)
        }
    };
    let mut err_prev: f64 = 1e-4;
    let mut steps = 0usize;
    let mut last_rejected = false;

    loop {
        if steps >= ctrl.max_steps {
            return Err(OdeError::MaxSteps(ctrl.max_steps));
        }
        steps += 1;
        let mut last = false;
        // stretch the final step rather than leave a sliver
        if t + 1.01 * h >= t1 {
            h = t1 - t;
            last = true;
        }
        if h < ctrl.h_min && !last {
            return Err(OdeError::StepUnderflow { t, h });
        }

        let trial = dp_step(&mut rhs, t, &y, h, &mut s, &mut stats);
        let err = match trial {
            Trial::Done => error_norm(&y, &s.y_new, &s.err, ctrl),
            Trial::Failed => f64::INFINITY,
        };

        if err <= 1.0 {
            let t_new = if last { t1 } else { t + h };
            while let Some(&g) = grid.peek() {
                if g > t_new {
                    break;
                }
                let state = if g == t_new {
                    s.y_new.clone()
                } else {
                    hermite(t, &y, &s.k[0], h, &s.y_new, &s.k[6], g)
                };
                trail.times.push(g);
                trail.states.push(state);
                grid.next();
            }
            stats.accepted += 1;
            y.copy_from_slice(&s.y_new);
            let (k0, rest) = s.k.split_at_mut(1);
            k0[0].copy_from_slice(&rest[5]);
            t = t_new;
            if last {
                return Ok((y, trail, stats));
            }
            let err_c = err.max(1e-10);
            let mut fac = SAFETY * err_c.powf(-ALPHA) * err_prev.powf(BETA);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(ctrl.h_max);
            err_prev = err_c;
            last_rejected = false;
        } else {
            stats.rejected += 1;
            last_rejected = true;
            let fac = if err.is_finite() {
                (SAFETY * err.powf(-ALPHA)).max(FAC_MIN)
            } else {
                0.5
            };
            h *= fac;
            if h < ctrl.h_min {
                return Err(OdeError::StepUnderflow { t, h });
            }
        }
    }
}

/// Fixed-step fifth-order Dormand–Prince propagation over `n_steps` equal steps.
pub fn integrate_fixed_step<F>(mut rhs: F, y0: &[f64], t0: f64, t1: f64, n_steps: usize) -> Result<Vec<f64>, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), RhsError>,
{
    if n_steps == 0 {
        return Err(OdeError::Invalid("n_steps must be positive".into()));
    }
    let h = (t1 - t0) / n_steps as f64;
    let mut stats = IntegrationStats::default();
    let mut s = Stages::new(y0.len());
    let mut y = y0.to_vec();
    for step in 0..n_steps {
        let t = t0 + step as f64 * h;
        match eval(&mut rhs, t, &y, &mut s.k[0], &mut stats) {
            Ok(true) => {}
            Ok(false) => return Err(OdeError::NonFiniteRhs { t }),
            Err(source) => return Err(OdeError::Rhs { t, source }),
        }
        if let Trial::Failed = dp_step(&mut rhs, t, &y, h, &mut s, &mut stats) {
            return Err(OdeError::NonFiniteRhs { t });
        }
        y.copy_from_slice(&s.y_new);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(_: f64, y: &[f64], dy: &mut [f64]) -> Result<(), RhsError> {
        dy[0] = -y[0];
        Ok(())
    }

    #[test]
    fn exponential_decay() {
        let (y, _) = integrate(decay, &[1.0], 0.0, 1.0, &StepControl::default(), &[]).unwrap();
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-8, "{}", y[0]);
    }

    #[test]
    fn zero_rhs_is_identity() {
        let y0 = [1.5, -2.25, 1e10];
        let (y, trail) = integrate(
            |_, _, dy: &mut [f64]| {
                dy.fill(0.0);
                Ok(())
            },
            &y0,
            0.0,
            3.0,
            &StepControl::default(),
            &[0.0, 1.0, 2.5, 3.0],
        )
        .unwrap();
        assert_eq!(y, y0.to_vec());
        assert_eq!(trail.times, vec![0.0, 1.0, 2.5, 3.0]);
        assert!(trail.states.iter().all(|s| s == &y0.to_vec()));
    }

    #[test]
    fn dense_output_tracks_solution() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.05).collect();
        let (_, trail) = integrate(decay, &[1.0], 0.0, 5.0, &StepControl::default(), &grid).unwrap();
        assert_eq!(trail.times.len(), grid.len());
        for (t, s) in trail.times.iter().zip(&trail.states) {
            assert!((s[0] - (-t).exp()).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn fifth_order_convergence() {
        let exact = (-2.0f64).exp();
        let coarse = integrate_fixed_step(decay, &[1.0], 0.0, 2.0, 10).unwrap()[0];
        let fine = integrate_fixed_step(decay, &[1.0], 0.0, 2.0, 20).unwrap()[0];
        let ratio = (coarse - exact).abs() / (fine - exact).abs();
        assert!((24.0..=40.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn tolerance_refinement_is_consistent() {
        let run = |tol: f64| {
            integrate(decay, &[1.0], 0.0, 4.0, &StepControl::with_tolerance(tol), &[])
                .unwrap()
                .0[0]
        };
        let coarse = run(1e-6);
        let fine = run(5e-7);
        assert!((coarse - fine).abs() < 1e-6);
    }

    #[test]
    fn deterministic() {
        let a = integrate(decay, &[1.0], 0.0, 7.0, &StepControl::default(), &[1.0, 2.0]).unwrap();
        let b = integrate(decay, &[1.0], 0.0, 7.0, &StepControl::default(), &[1.0, 2.0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn blow_up_underflows() {
        // y' = y^2 from y = 1 explodes at t = 1
        let res = integrate(
            |_, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[0] * y[0];
                Ok(())
            },
            &[1.0],
            0.0,
            2.0,
            &StepControl::default(),
            &[],
        );
        assert!(
            matches!(res, Err(OdeError::StepUnderflow { .. }) | Err(OdeError::MaxSteps(_))),
            "{res:?}"
        );
    }

    #[test]
    fn rhs_failure_at_start_is_reported() {
        let res = integrate(
            |_, _, _: &mut [f64]| Err(RhsError("bad".into())),
            &[1.0],
            0.0,
            1.0,
            &StepControl::default(),
            &[],
        );
        assert!(matches!(res, Err(OdeError::Rhs { .. })));
        let res = integrate(
            |_, _, dy: &mut [f64]| {
                dy[0] = f64::NAN;
                Ok(())
            },
            &[1.0],
            0.0,
            1.0,
            &StepControl::default(),
            &[],
        );
        assert!(matches!(res, Err(OdeError::NonFiniteRhs { .. })));
    }

    #[test]
    fn rhs_failure_in_trial_stage_shrinks_step() {
        // the right-hand side refuses y < 0.5; the solution e^{-t} stays above it until ln 2
        let res = integrate(
            |_, y: &[f64], dy: &mut [f64]| {
                if y[0] < 0.45 {
                    return Err(RhsError("out of domain".into()));
                }
                dy[0] = -y[0];
                Ok(())
            },
            &[1.0],
            0.0,
            0.6,
            &StepControl {
                h_init: Some(0.5),
                ..StepControl::default()
            },
            &[],
        )
        .unwrap();
        assert!((res.0[0] - (-0.6f64).exp()).abs() < 1e-8);
    }
}
