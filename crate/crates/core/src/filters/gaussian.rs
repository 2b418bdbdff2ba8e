//! Gaussian projection and linear-noise prediction, Kalman correction.

use super::FilterError;
use crate::gaussmoments::{expect_each, expect_matrix, GaussianState};
use crate::netmodel::{Polynomial, ReactionNetwork};
use nalgebra::{DMatrix, DVector};

/// Propensities in a frame where the state is counted in units of `scale`
/// molecules: `p_j(z) = h_j(scale·z)/scale`, diffusion divided by `scale`.
/// `scale = 1` is the count frame.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    a: DMatrix<f64>,
    props: Vec<Polynomial>,
    jac: Vec<Vec<Polynomial>>,
    scale: f64,
}

impl GaussianModel {
    pub fn new(net: &ReactionNetwork, scale: f64) -> Self {
        let props = net.scaled_propensity_polynomials(scale);
        let n = net.n_species();
        let jac = props
            .iter()
            .map(|p| (0..n).map(|i| p.derivative(i)).collect())
            .collect();
        Self {
            a: net.net_effect_matrix().to_f64(),
            props,
            jac,
            scale,
        }
    }

    pub fn counts(net: &ReactionNetwork) -> Self {
        Self::new(net, 1.0)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn n_species(&self) -> usize {
        self.a.nrows()
    }

    /// Projection drift with Gaussian expectations of `h`, `J_h`, `diag h`.
    pub fn gpf(&self, state: &GaussianState) -> Result<(DVector<f64>, DMatrix<f64>), FilterError> {
        let eh = expect_each(state, &self.props)?;
        let ej = expect_matrix(state, &self.jac)?;
        Ok(self.assemble(&state.cov, &eh, &ej))
    }

    /// Linear-noise drift: the same expressions evaluated at the mean.
    pub fn lna(&self, state: &GaussianState) -> (DVector<f64>, DMatrix<f64>) {
        let mu = state.mean.as_slice();
        let h = DVector::from_iterator(self.props.len(), self.props.iter().map(|p| p.eval(mu)));
        let m = self.props.len();
        let n = self.n_species();
        let j = DMatrix::from_fn(m, n, |r, c| self.jac[r][c].eval(mu));
        self.assemble(&state.cov, &h, &j)
    }

    fn assemble(&self, q: &DMatrix<f64>, h: &DVector<f64>, j: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let dmu = &self.a * h;
        let drift = &self.a * j * q;
        let n = self.n_species();
        let mut dq = DMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                let mut diff = 0.0;
                for (k, hk) in h.iter().enumerate() {
                    diff += self.a[(r, k)] * self.a[(c, k)] * hk;
                }
                dq[(r, c)] = drift[(r, c)] + drift[(c, r)] + diff / self.scale;
            }
        }
        (dmu, dq)
    }
}

/// `dμ = A E[h]`, `dQ = Q E[J]ᵀAᵀ + A E[J] Q + A diag(E[h]) Aᵀ` (counts).
pub fn gpf_drift(net: &ReactionNetwork, state: &GaussianState) -> Result<(DVector<f64>, DMatrix<f64>), FilterError> {
    GaussianModel::counts(net).gpf(state)
}

/// `dμ = A h(μ)`, `dQ = Q J(μ)ᵀAᵀ + A J(μ) Q + A diag(h(μ)) Aᵀ` (counts).
pub fn lna_drift(net: &ReactionNetwork, state: &GaussianState) -> (DVector<f64>, DMatrix<f64>) {
    GaussianModel::counts(net).lna(state)
}

/// Kalman update for `y ~ N(G x, V)`.
pub fn kalman_correct(
    state: &GaussianState,
    y: &DVector<f64>,
    g: &DMatrix<f64>,
    v: &DMatrix<f64>,
) -> Result<GaussianState, FilterError> {
    let n = state.dim();
    if g.ncols() != n || g.nrows() != y.len() || v.shape() != (y.len(), y.len()) {
        return Err(FilterError::Dimension("observation model does not match state".into()));
    }
    let q = &state.cov;
    let s = g * q * g.transpose() + v;
    let s_inv = s.clone().try_inverse().ok_or(FilterError::SingularInnovation)?;
    if !s_inv.iter().all(|x| x.is_finite()) {
        return Err(FilterError::SingularInnovation);
    }
    let k = q * g.transpose() * s_inv;
    let mean = &state.mean + &k * (y - g * &state.mean);
    let updated = q - &k * g * q;
    let cov = 0.5 * (&updated + updated.transpose());
    Ok(GaussianState::unchecked(mean, cov))
}

/// The mode of a Gaussian is its mean.
pub fn gaussian_map(state: &GaussianState) -> DVector<f64> {
    state.mean.clone()
}
