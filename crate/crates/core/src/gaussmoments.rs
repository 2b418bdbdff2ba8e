//! Closed-form expectations of polynomials under multivariate Gaussian laws.
//!
//! Raw moments are expanded binomially around the mean; the remaining
//! central moments are sums over pair partitions of the covariance
//! (Isserlis/Wick).

use crate::netmodel::{Polynomial, ReactionNetwork};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Highest total moment order supported by [`gaussian_moment`].
pub const MAX_MOMENT_ORDER: u32 = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussError {
    #[error("moment order {0} exceeds the supported maximum {MAX_MOMENT_ORDER}")]
    OrderTooHigh(u32),
    #[error("invalid Gaussian state: {0}")]
    InvalidState(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Mean vector and covariance matrix of a Gaussian approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianState {
    /// Checks symmetry and positive semidefiniteness (eigenvalues down to
    /// `-1e-10·trace` are tolerated).
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, GaussError> {
        let n = mean.len();
        if cov.shape() != (n, n) {
            return Err(GaussError::Dimension(format!(
                "covariance is {:?}, mean has {n} entries",
                cov.shape()
            )));
        }
        let scale = cov.abs().max().max(f64::MIN_POSITIVE);
        if (&cov - cov.transpose()).abs().max() > 1e-12 * scale {
            return Err(GaussError::InvalidState("covariance is not symmetric".into()));
        }
        let trace = cov.trace().abs();
        let min_eig = cov.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-10 * trace.max(f64::MIN_POSITIVE) {
            return Err(GaussError::InvalidState(format!(
                "covariance has negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self { mean, cov })
    }

    /// Builds a state without validation; for internal ODE states that are
    /// symmetric by construction.
    pub(crate) fn unchecked(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self { mean, cov }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Flattens to `(μ, col(Q))`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.mean.iter().chain(self.cov.iter()).copied().collect()
    }

    pub fn from_slice(n: usize, y: &[f64]) -> Self {
        let mean = DVector::from_column_slice(&y[..n]);
        let mut cov = DMatrix::from_column_slice(n, n, &y[n..n + n * n]);
        let sym = 0.5 * (&cov + cov.transpose());
        cov.copy_from(&sym);
        Self { mean, cov }
    }
}

/// Sum over perfect matchings of `indices` of `∏ Q[a, b]`.
fn pair_partition_sum(cov: &DMatrix<f64>, indices: &[usize]) -> f64 {
    if indices.is_empty() {
        return 1.0;
    }
    let first = indices[0];
    let mut total = 0.0;
    for k in 1..indices.len() {
        let partner = indices[k];
        let q = cov[(first, partner)];
        if q == 0.0 {
            continue;
        }
        let rest: Vec<usize> = indices
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != 0 && i != k)
            .map(|(_, &v)| v)
            .collect();
        total += q * pair_partition_sum(cov, &rest);
    }
    total
}

/// Central moment `E[∏ (x_i - μ_i)^{β_i}]`.
fn central_moment(cov: &DMatrix<f64>, beta: &[u32]) -> f64 {
    let order: u32 = beta.iter().sum();
    if order % 2 == 1 {
        return 0.0;
    }
    let indices: Vec<usize> = beta
        .iter()
        .enumerate()
        .flat_map(|(i, &b)| std::iter::repeat_n(i, b as usize))
        .collect();
    pair_partition_sum(cov, &indices)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Raw moment `E[∏ x_i^{α_i}]` of the Gaussian `state`.
pub fn gaussian_moment(state: &GaussianState, alpha: &[u32]) -> Result<f64, GaussError> {
    let order: u32 = alpha.iter().sum();
    if order > MAX_MOMENT_ORDER {
        return Err(GaussError::OrderTooHigh(order));
    }
    if alpha.len() != state.dim() {
        return Err(GaussError::Dimension(
            "multi-index length differs from state dimension".into(),
        ));
    }
    let n = alpha.len();
    let mut beta = vec![0u32; n];
    let mut total = 0.0;
    // odometer over 0 ≤ β ≤ α
    loop {
        let mut weight = 1.0;
        for i in 0..n {
            weight *= binomial(alpha[i], beta[i]) * state.mean[i].powi((alpha[i] - beta[i]) as i32);
        }
        if weight != 0.0 {
            total += weight * central_moment(&state.cov, &beta);
        }
        let mut i = 0;
        loop {
            if i == n {
                return Ok(total);
            }
            if beta[i] < alpha[i] {
                beta[i] += 1;
                break;
            }
            beta[i] = 0;
            i += 1;
        }
    }
}

/// `E[p(x)]` by linearity over the monomials of `p`.
pub fn expect_polynomial(state: &GaussianState, poly: &Polynomial) -> Result<f64, GaussError> {
    poly.terms()
        .map(|(alpha, c)| gaussian_moment(state, alpha).map(|m| c * m))
        .sum()
}

/// `E[h(x)]`, one entry per reaction.
pub fn expect_propensity(net: &ReactionNetwork, state: &GaussianState) -> Result<DVector<f64>, GaussError> {
    expect_each(state, net.propensity_polynomials())
}

/// `E[J_h(x)]`, an m×n matrix.
pub fn expect_jacobian(net: &ReactionNetwork, state: &GaussianState) -> Result<DMatrix<f64>, GaussError> {
    expect_matrix(state, net.jacobian_polynomials())
}

/// Diagonal of `E[H(x)]`. The diffusion of the Fokker–Planck approximation is
/// `A diag(h(x)) Aᵀ`, so `H = diag(h)` and its expectation is `E[h(x)]`.
pub fn expect_diffusion(net: &ReactionNetwork, state: &GaussianState) -> Result<DVector<f64>, GaussError> {
    expect_propensity(net, state)
}

pub(crate) fn expect_each(state: &GaussianState, polys: &[Polynomial]) -> Result<DVector<f64>, GaussError> {
    let values: Result<Vec<f64>, _> = polys.iter().map(|p| expect_polynomial(state, p)).collect();
    Ok(DVector::from_vec(values?))
}

pub(crate) fn expect_matrix(state: &GaussianState, polys: &[Vec<Polynomial>]) -> Result<DMatrix<f64>, GaussError> {
    let m = polys.len();
    let n = state.dim();
    let mut out = DMatrix::zeros(m, n);
    for (j, row) in polys.iter().enumerate() {
        for (i, p) in row.iter().enumerate() {
            out[(j, i)] = expect_polynomial(state, p)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::library;
    use proptest::prelude::*;

    fn scalar(mu: f64, q: f64) -> GaussianState {
        GaussianState::new(DVector::from_element(1, mu), DMatrix::from_element(1, 1, q)).unwrap()
    }

    /// Composite Simpson on [μ-12σ, μ+12σ]; independent of the pairing code.
    fn quadrature_1d(mu: f64, q: f64, f: impl Fn(f64) -> f64) -> f64 {
        let sd = q.sqrt();
        let (a, b) = (mu - 12.0 * sd, mu + 12.0 * sd);
        let n = 20_000;
        let h = (b - a) / n as f64;
        let dens = |x: f64| (-(x - mu).powi(2) / (2.0 * q)).exp() / (2.0 * std::f64::consts::PI * q).sqrt();
        let mut s = 0.0;
        for i in 0..=n {
            let x = a + i as f64 * h;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            s += w * f(x) * dens(x);
        }
        s * h / 3.0
    }

    #[test]
    fn first_moment_is_mean() {
        let st = GaussianState::new(
            DVector::from_vec(vec![1.5, -2.0]),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]),
        )
        .unwrap();
        assert_eq!(gaussian_moment(&st, &[1, 0]).unwrap(), 1.5);
        assert_eq!(gaussian_moment(&st, &[0, 1]).unwrap(), -2.0);
    }

    #[test]
    fn standard_normal_fourth_moment() {
        let st = scalar(0.0, 1.0);
        let oracle = quadrature_1d(0.0, 1.0, |x| x.powi(4));
        assert!((oracle - 3.0).abs() < 1e-10);
        assert_eq!(gaussian_moment(&st, &[4]).unwrap(), 3.0);
    }

    #[test]
    fn correlation_moment() {
        let rho = 0.37;
        let st = GaussianState::new(DVector::zeros(2), DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0])).unwrap();
        assert_eq!(gaussian_moment(&st, &[1, 1]).unwrap(), rho);
    }

    #[test]
    fn polynomial_expectations_match_quadrature() {
        let st = scalar(1.0, 2.0);
        let cube = Polynomial::monomial(vec![3], 1.0);
        assert!((expect_polynomial(&st, &cube).unwrap() - 7.0).abs() < 1e-12);
        assert!((quadrature_1d(1.0, 2.0, |x| x.powi(3)) - 7.0).abs() < 1e-9);

        let (mu, q) = (2.3, 0.7);
        let st = scalar(mu, q);
        let mut ff = Polynomial::monomial(vec![2], 1.0);
        ff.add_term(vec![1], -1.0);
        let got = expect_polynomial(&st, &ff).unwrap();
        assert!((got - (q + mu * mu - mu)).abs() < 1e-12);
        assert!((quadrature_1d(mu, q, |x| x * (x - 1.0)) - got).abs() < 1e-9);

        let c = Polynomial::constant(1, 4.25);
        assert_eq!(expect_polynomial(&st, &c).unwrap(), 4.25);
    }

    #[test]
    fn order_limit() {
        let st = scalar(0.0, 1.0);
        assert!(gaussian_moment(&st, &[8]).is_ok());
        assert_eq!(gaussian_moment(&st, &[9]), Err(GaussError::OrderTooHigh(9)));
    }

    #[test]
    fn bistable_expected_propensity() {
        let net = library::bistable_default();
        let st = scalar(2.0, 1.0);
        let eh = expect_propensity(&net, &st).unwrap();
        assert!((eh[2] - 0.54).abs() < 1e-12, "{}", eh[2]);
        let k = net.rate_constants();
        let oracle = quadrature_1d(2.0, 1.0, |x| k[3] * x * (x - 1.0) * (x - 2.0));
        assert!((eh[3] - oracle).abs() < 1e-9 * oracle.abs().max(1.0));
    }

    #[test]
    fn first_order_expectation_is_evaluation_at_mean() {
        let net = library::immigration_death(10.0, 1.0);
        let st = scalar(7.5, 3.0);
        let eh = expect_propensity(&net, &st).unwrap();
        let h = net.propensity_real(&[7.5]);
        assert_eq!(eh.as_slice(), h.as_slice());
    }

    #[test]
    fn bilinear_jacobian_expectation() {
        let net = library::limit_cycle_default();
        let k2 = net.rate_constants()[1];
        let st = GaussianState::new(
            DVector::from_vec(vec![3.0, 5.0, 7.0]),
            DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.1, 0.0, 0.1, 3.0]),
        )
        .unwrap();
        let ej = expect_jacobian(&net, &st).unwrap();
        assert!((ej[(1, 0)] - k2 * 5.0).abs() < 1e-15);
        assert!((ej[(1, 1)] - k2 * 3.0).abs() < 1e-15);
        assert_eq!(ej[(1, 2)], 0.0);
        assert_eq!(
            expect_diffusion(&net, &st).unwrap(),
            expect_propensity(&net, &st).unwrap()
        );
    }

    #[test]
    fn rejects_indefinite_covariance() {
        let res = GaussianState::new(DVector::zeros(2), DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        assert!(matches!(res, Err(GaussError::InvalidState(_))));
    }

    fn spd3() -> impl Strategy<Value = (Vec<f64>, DMatrix<f64>)> {
        (
            prop::collection::vec(-2.0f64..2.0, 3),
            prop::collection::vec(-1.0f64..1.0, 9),
        )
            .prop_map(|(mu, l)| {
                let l = DMatrix::from_row_slice(3, 3, &l);
                let q = &l * l.transpose() + DMatrix::identity(3, 3) * 0.1;
                (mu, q)
            })
    }

    proptest! {
        #[test]
        fn permutation_invariance((mu, q) in spd3(), alpha in prop::collection::vec(0u32..3, 3)) {
            let st = GaussianState::new(DVector::from_vec(mu.clone()), q.clone()).unwrap();
            let perm = [2usize, 0, 1];
            let mu_p: Vec<f64> = perm.iter().map(|&i| mu[i]).collect();
            let q_p = DMatrix::from_fn(3, 3, |r, c| q[(perm[r], perm[c])]);
            let alpha_p: Vec<u32> = perm.iter().map(|&i| alpha[i]).collect();
            let st_p = GaussianState::new(DVector::from_vec(mu_p), q_p).unwrap();
            let a = gaussian_moment(&st, &alpha).unwrap();
            let b = gaussian_moment(&st_p, &alpha_p).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
        }

        #[test]
        fn even_central_moments_are_homogeneous((_, q) in spd3(), alpha in prop::collection::vec(0u32..3, 3)) {
            let order: u32 = alpha.iter().sum();
            prop_assume!(order.is_multiple_of(2));
            let st = GaussianState::new(DVector::zeros(3), q.clone()).unwrap();
            let st4 = GaussianState::new(DVector::zeros(3), q * 4.0).unwrap();
            let a = gaussian_moment(&st, &alpha).unwrap();
            let b = gaussian_moment(&st4, &alpha).unwrap();
            let want = a * 4f64.powi(order as i32 / 2);
            prop_assert!((b - want).abs() <= 1e-10 * want.abs().max(1.0));
        }
    }
}
