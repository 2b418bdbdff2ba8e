//! Moment closures: the normal closure (raw second moments, Gaussian
//! third moments) and the gamma projection / gamma closure pair on the
//! one-species template `A = (a₁, a₂)`, `h(x) = (k₁x, k₂x(x−1))`.

use crate::gaussmoments::{expect_polynomial, GaussError, GaussianState};
use crate::netmodel::{Polynomial, ReactionNetwork};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClosureError {
    #[error(transparent)]
    Gauss(#[from] GaussError),
    #[error("outside the domain: {0}")]
    Domain(String),
    #[error("singular formula: {0}")]
    Pole(String),
}

/// `dμ = A E[h]`, `dQ = dE[xxᵀ] − dμ μᵀ − μ dμᵀ` with
/// `dE[x_i x_j] = Σ_k A_ik E[x_j h_k] + A_jk E[x_i h_k] + A_ik A_jk E[h_k]`,
/// all expectations Gaussian.
pub fn normal_closure_drift(
    net: &ReactionNetwork,
    mu: &DVector<f64>,
    q: &DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>), ClosureError> {
    let state = GaussianState::new(mu.clone(), q.clone())?;
    let n = net.n_species();
    if state.dim() != n {
        return Err(ClosureError::Domain(format!(
            "state has dimension {}, network {n}",
            state.dim()
        )));
    }
    let a = net.net_effect_matrix().to_f64();
    let props = net.propensity_polynomials();
    let eh: Vec<f64> = props
        .iter()
        .map(|p| expect_polynomial(&state, p))
        .collect::<Result<_, _>>()?;
    // E[x_i h_k]
    let mut exh = DMatrix::zeros(n, props.len());
    for i in 0..n {
        let xi = Polynomial::shifted_variable(n, i, 0.0);
        for (k, p) in props.iter().enumerate() {
            exh[(i, k)] = expect_polynomial(&state, &xi.mul(p))?;
        }
    }
    let dmu = &a * DVector::from_vec(eh.clone());
    let mut dq = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut second = 0.0;
            for k in 0..props.len() {
                second += a[(i, k)] * exh[(j, k)] + a[(j, k)] * exh[(i, k)] + a[(i, k)] * a[(j, k)] * eh[k];
            }
            let v = second - dmu[i] * mu[j] - mu[i] * dmu[j];
            dq[(i, j)] = v;
            dq[(j, i)] = v;
        }
    }
    Ok((dmu, dq))
}

/// One species, `A = (a₁, a₂)`, `h(x) = (k₁x, k₂x(x−1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BimolecularTemplate {
    pub a1: i64,
    pub a2: i64,
    pub k1: f64,
    pub k2: f64,
}

impl BimolecularTemplate {
    pub fn new(a1: i64, a2: i64, k1: f64, k2: f64) -> Result<Self, ClosureError> {
        if !(k1 >= 0.0 && k2 >= 0.0 && k1.is_finite() && k2.is_finite()) {
            return Err(ClosureError::Domain("rates must be finite and nonnegative".into()));
        }
        Ok(Self { a1, a2, k1, k2 })
    }

    fn coefficients(&self) -> (f64, f64, f64, f64) {
        let (a1, a2) = (self.a1 as f64, self.a2 as f64);
        (a1, a2, self.k1, self.k2)
    }
}

/// Gamma law with mean `mu` and shape `kappa`; variance `μ²/κ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaState {
    pub mu: f64,
    pub kappa: f64,
}

impl GammaState {
    pub fn new(mu: f64, kappa: f64) -> Result<Self, ClosureError> {
        if !(mu > 0.0 && kappa > 0.0 && mu.is_finite() && kappa.is_finite()) {
            return Err(ClosureError::Domain(format!(
                "gamma law needs μ > 0, κ > 0 (got {mu}, {kappa})"
            )));
        }
        Ok(Self { mu, kappa })
    }

    pub fn from_mean_variance(mu: f64, sigma2: f64) -> Result<Self, ClosureError> {
        if !(sigma2 > 0.0) {
            return Err(ClosureError::Domain(format!("variance {sigma2} is not positive")));
        }
        Self::new(mu, mu * mu / sigma2)
    }

    pub fn variance(&self) -> f64 {
        self.mu * self.mu / self.kappa
    }
}

/// Projection of the diffusion approximation onto the gamma family, in
/// `(μ, κ)`.
pub fn gamma_projection_drift(tpl: &BimolecularTemplate, mu: f64, kappa: f64) -> Result<(f64, f64), ClosureError> {
    GammaState::new(mu, kappa)?;
    if kappa == 1.0 {
        return Err(ClosureError::Pole("κ = 1 in the shape equation".into()));
    }
    let denom = 1.0 - kappa * trigamma(kappa)?;
    if denom.abs() < 1e-12 {
        return Err(ClosureError::Pole(format!("1 − κφ̇(κ) = {denom:e}")));
    }
    let (a1, a2, k1, k2) = tpl.coefficients();
    let dmu = (a1 * k1 - a2 * k2) * mu + a2 * k2 * mu * mu + a2 * k2 * mu * mu / kappa;
    let brace = a2 * k2 * mu
        + a2 * a2 * k2 * kappa / 2.0
        + (a1 * a1 * k1 - a2 * a2 * k2) * kappa * kappa / (2.0 * mu * (kappa - 1.0));
    Ok((dmu, brace / denom))
}

/// Moment closure with gamma third moments, in `(μ, σ²)`.
pub fn gamma_closure_drift(tpl: &BimolecularTemplate, mu: f64, sigma2: f64) -> Result<(f64, f64), ClosureError> {
    if mu == 0.0 {
        return Err(ClosureError::Pole("μ = 0".into()));
    }
    if !(mu > 0.0 && sigma2 >= 0.0) {
        return Err(ClosureError::Domain(format!("need μ > 0, σ² ≥ 0 (got {mu}, {sigma2})")));
    }
    let (a1, a2, k1, k2) = tpl.coefficients();
    let second = sigma2 + mu * mu;
    let dmu = (a1 * k1 - a2 * k2) * mu + a2 * k2 * mu * mu + a2 * k2 * sigma2;
    let dvar = 2.0 * (a1 * k1 - a2 * k2) * sigma2
        + 4.0 * a2 * k2 * second * sigma2 / mu
        + (a1 * a1 * k1 - a2 * a2 * k2) * mu
        + a2 * a2 * k2 * second;
    Ok((dmu, dvar))
}

/// `E(x³) = (μ² + 2σ²)(μ² + σ²)/μ` for a gamma law.
pub fn gamma_third_moment(mu: f64, sigma2: f64) -> f64 {
    (mu * mu + 2.0 * sigma2) * (mu * mu + sigma2) / mu
}

const SHIFT_TO: f64 = 8.0;

fn check_positive(kappa: f64) -> Result<(), ClosureError> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(ClosureError::Domain(format!("argument {kappa} must be positive")))
    }
}

/// `φ(κ) = d/dκ log Γ(κ)`.
pub fn digamma(kappa: f64) -> Result<f64, ClosureError> {
    check_positive(kappa)?;
    let mut x = kappa;
    let mut acc = 0.0;
    while x < SHIFT_TO {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    // Bernoulli terms B₂ₙ/(2n) up to n = 7
    let series = r
        * (1.0 / 12.0
            - r * (1.0 / 120.0
                - r * (1.0 / 252.0 - r * (1.0 / 240.0 - r * (1.0 / 132.0 - r * (691.0 / 32760.0 - r / 12.0))))));
    Ok(acc + x.ln() - 0.5 / x - series)
}

/// `φ̇(κ) = d²/dκ² log Γ(κ)`.
pub fn trigamma(kappa: f64) -> Result<f64, ClosureError> {
    check_positive(kappa)?;
    let mut x = kappa;
    let mut acc = 0.0;
    while x < SHIFT_TO {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    // B₂ₙ up to n = 7
    let series = r
        * (1.0 / 6.0
            - r * (1.0 / 30.0
                - r * (1.0 / 42.0 - r * (1.0 / 30.0 - r * (5.0 / 66.0 - r * (691.0 / 2730.0 - r * 7.0 / 6.0))))));
    Ok(acc + 1.0 / x + 0.5 * r + series / x)
}
