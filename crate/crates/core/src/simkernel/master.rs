use super::SimError;
use crate::netmodel::ReactionNetwork;
use crate::odecore::{integrate, StepControl};
use nalgebra::{DMatrix, DVector};

/// Probability mass on the box `∏ [0, box_max[i]]`, plus whatever has leaked
/// out of it. Flat storage with the first species varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedDistribution {
    box_max: Vec<usize>,
    probs: Vec<f64>,
    pub mass_lost: f64,
}

impl TruncatedDistribution {
    pub fn zeros(box_max: Vec<usize>) -> Self {
        let size = box_max.iter().map(|&b| b + 1).product();
        Self {
            box_max,
            probs: vec![0.0; size],
            mass_lost: 0.0,
        }
    }

    pub fn point_mass(box_max: Vec<usize>, x: &[usize]) -> Result<Self, SimError> {
        let mut d = Self::zeros(box_max);
        let idx = d
            .index_of(x)
            .ok_or_else(|| SimError::Invalid(format!("{x:?} lies outside the box")))?;
        d.probs[idx] = 1.0;
        Ok(d)
    }

    /// Builds a distribution from a probability function on box states.
    pub fn from_fn(box_max: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut d = Self::zeros(box_max);
        for idx in 0..d.probs.len() {
            let x = d.state_of(idx);
            d.probs[idx] = f(&x);
        }
        d
    }

    pub fn box_max(&self) -> &[usize] {
        &self.box_max
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total_in_box(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn prob(&self, x: &[usize]) -> f64 {
        self.index_of(x).map_or(0.0, |i| self.probs[i])
    }

    pub fn index_of(&self, x: &[usize]) -> Option<usize> {
        if x.len() != self.box_max.len() {
            return None;
        }
        let mut idx = 0;
        let mut stride = 1;
        for (&xi, &b) in x.iter().zip(&self.box_max) {
            if xi > b {
                return None;
            }
            idx += xi * stride;
            stride *= b + 1;
        }
        Some(idx)
    }

    pub fn state_of(&self, mut idx: usize) -> Vec<usize> {
        self.box_max
            .iter()
            .map(|&b| {
                let v = idx % (b + 1);
                idx /= b + 1;
                v
            })
            .collect()
    }

    /// Total variation distance between the in-box parts of two distributions.
    pub fn total_variation(&self, other: &Self) -> f64 {
        assert_eq!(self.box_max, other.box_max);
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// CSV with header `x1,...,xn,p`, one row per box state.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 1..=self.box_max.len() {
            out.push_str(&format!("x{i},"));
        }
        out.push_str("p\n");
        for (idx, p) in self.probs.iter().enumerate() {
            for v in self.state_of(idx) {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&super::fmt17(*p));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterOptions {
    pub tolerance: f64,
    /// Largest acceptable leaked probability before the run is reported as failed.
    pub mass_cap: f64,
}

impl Default for MasterOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            mass_cap: 1e-6,
        }
    }
}

/// A single probability flux `from → to` at rate `rate`; `to = None` leaves the box.
struct Flux {
    from: usize,
    to: Option<usize>,
    rate: f64,
}

/// Integrates the master equation restricted to the box of `p0`. Flux to
/// states outside the box is absorbed into `mass_lost`; nothing flows in.
pub fn master_evolve(
    net: &ReactionNetwork,
    p0: &TruncatedDistribution,
    t0: f64,
    t_end: f64,
    opts: &MasterOptions,
) -> Result<TruncatedDistribution, SimError> {
    let n = net.n_species();
    if p0.box_max.len() != n {
        return Err(SimError::Dimension("box dimension differs from species count".into()));
    }
    let a = &net.net_effect_matrix().0;
    let m = net.n_reactions();
    let mut fluxes = Vec::new();
    let mut h = vec![0.0; m];
    for idx in 0..p0.len() {
        let x = p0.state_of(idx);
        let xi: Vec<i64> = x.iter().map(|&v| v as i64).collect();
        net.propensity_into(&xi, &mut h);
        for j in 0..m {
            if h[j] == 0.0 || (0..n).all(|i| a[(i, j)] == 0) {
                continue;
            }
            let target: Option<Vec<usize>> = (0..n)
                .map(|i| {
                    let v = xi[i] + a[(i, j)];
                    (v >= 0).then_some(v as usize)
                })
                .collect();
            let to = target.and_then(|t| p0.index_of(&t));
            fluxes.push(Flux {
                from: idx,
                to,
                rate: h[j],
            });
        }
    }

    let size = p0.len();
    let mut y0 = p0.probs.clone();
    y0.push(p0.mass_lost);
    let rhs = |_: f64, p: &[f64], dp: &mut [f64]| {
        dp.fill(0.0);
        for f in &fluxes {
            let q = f.rate * p[f.from];
            dp[f.from] -= q;
            match f.to {
                Some(to) => dp[to] += q,
                None => dp[size] += q,
            }
        }
        Ok(())
    };
    let ctrl = StepControl {
        max_steps: 50_000_000,
        ..StepControl::with_tolerance(opts.tolerance)
    };
    let (y, _) = integrate(rhs, &y0, t0, t_end, &ctrl, &[])?;
    let mass_lost = y[size];
    if mass_lost > opts.mass_cap {
        return Err(SimError::BoxTooSmall {
            mass_lost,
            cap: opts.mass_cap,
        });
    }
    Ok(TruncatedDistribution {
        box_max: p0.box_max.clone(),
        probs: y[..size].to_vec(),
        mass_lost,
    })
}

/// Mean and covariance of the in-box distribution, renormalized to unit mass.
pub fn master_moments(dist: &TruncatedDistribution) -> (DVector<f64>, DMatrix<f64>) {
    let n = dist.box_max.len();
    let total = dist.total_in_box();
    let mut mean = DVector::zeros(n);
    for (idx, &p) in dist.probs.iter().enumerate() {
        let x = dist.state_of(idx);
        for i in 0..n {
            mean[i] += p * x[i] as f64;
        }
    }
    mean /= total;
    let mut cov = DMatrix::zeros(n, n);
    for (idx, &p) in dist.probs.iter().enumerate() {
        let x = dist.state_of(idx);
        for i in 0..n {
            for k in 0..n {
                cov[(i, k)] += p * (x[i] as f64 - mean[i]) * (x[k] as f64 - mean[k]);
            }
        }
    }
    cov /= total;
    (mean, cov)
}
