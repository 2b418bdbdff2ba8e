//! Projection onto the quartic exponential family
//! `p(x) ∝ exp(θ₁x + θ₂x² + θ₃x³ + θ₄x⁴)` for one-species networks.

use super::quadrature::{quartic_moments, QuadratureError, QuarticExponent, QuarticMoments, DEFAULT_TOL};
use crate::netmodel::ReactionNetwork;
use nalgebra::{Matrix4, Vector4};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuarticError {
    #[error("quartic density is not normalizable: {0}")]
    NotIntegrable(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("Fisher information matrix is not positive definite")]
    FisherNotPd,
    #[error("|θ₄| = {0:e} is too small for the moment recursion")]
    IllConditioned(f64),
    #[error("the quartic family is univariate; network has {0} species")]
    NotUnivariate(usize),
}

impl From<QuadratureError> for QuarticError {
    fn from(e: QuadratureError) -> Self {
        match e {
            QuadratureError::NotIntegrable(m) => QuarticError::NotIntegrable(m),
            other => QuarticError::Quadrature(other.to_string()),
        }
    }
}

/// Natural parameters with cached moments `η₀..η₈` and `ln I₀(θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticState {
    pub theta: [f64; 4],
    pub eta: [f64; 9],
    pub log_norm: f64,
    frame: QuarticMoments,
}

impl QuarticState {
    pub fn new(theta: [f64; 4]) -> Result<Self, QuarticError> {
        Self::with_tolerance(theta, DEFAULT_TOL)
    }

    pub fn with_tolerance(theta: [f64; 4], tol: f64) -> Result<Self, QuarticError> {
        let frame = quartic_moments(theta, tol)?;
        Ok(Self {
            theta,
            eta: frame.raw_moments(),
            log_norm: frame.log_norm,
            frame,
        })
    }

    pub fn mean(&self) -> f64 {
        self.eta[1]
    }

    pub fn variance(&self) -> f64 {
        let nu = &self.frame.nu;
        self.frame.width * self.frame.width * (nu[2] - nu[1] * nu[1])
    }

    /// `g(θ)⁻¹ r`, solved in the centred statistics where `g` stays well
    /// conditioned: `g⁻¹ = Tᵀ g̃⁻¹ T`.
    pub fn solve_fisher(&self, rhs: &Vector4<f64>) -> Result<Vector4<f64>, QuarticError> {
        let t = centring(self.frame.center, self.frame.width);
        let g = FisherMatrix(covariance_of_powers(&self.frame.nu));
        Ok(t.transpose() * g.solve(&(t * rhs))?)
    }
}

/// `I₀, I₁, I₂` with the normalized moments `η₀ = 1, η₁, η₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseIntegrals {
    pub log_i0: f64,
    pub eta: [f64; 3],
}

impl BaseIntegrals {
    /// Unnormalized integrals; overflow to infinity is possible for large θ.
    pub fn integrals(&self) -> [f64; 3] {
        let i0 = self.log_i0.exp();
        self.eta.map(|e| e * i0)
    }
}

/// `∫ xⁱ exp(θᵀc(x)) dx` for `i = 0, 1, 2`.
pub fn quartic_base_integrals(theta: [f64; 4]) -> Result<BaseIntegrals, QuarticError> {
    let m = quartic_moments(theta, DEFAULT_TOL)?;
    let eta = m.raw_moments();
    Ok(BaseIntegrals {
        log_i0: m.log_norm,
        eta: [eta[0], eta[1], eta[2]],
    })
}

/// `η₃..η₈` from `η₀..η₂` by integration by parts of the density.
///
/// Loses accuracy roughly by a factor `|θ₂|/|θ₄|` per two orders, so it is
/// an identity for well-scaled θ only; the filters integrate all moments.
pub fn quartic_moment_recursion(theta: [f64; 4], base: [f64; 3]) -> Result<[f64; 6], QuarticError> {
    let [t1, t2, t3, t4] = theta;
    if !(t4.abs() >= 1e-12) {
        return Err(QuarticError::IllConditioned(t4.abs()));
    }
    let mut eta = [0.0; 9];
    eta[..3].copy_from_slice(&base);
    for i in 3..9 {
        // the (i-3)·η_{i-4} term vanishes at i = 3
        let lower = if i >= 4 { (i - 3) as f64 * eta[i - 4] } else { 0.0 };
        eta[i] = -(lower + t1 * eta[i - 3] + 2.0 * t2 * eta[i - 2] + 3.0 * t3 * eta[i - 1]) / (4.0 * t4);
    }
    Ok([eta[3], eta[4], eta[5], eta[6], eta[7], eta[8]])
}

/// `g_ij = η_{i+j} − η_i η_j`, `i, j = 1..4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherMatrix(pub Matrix4<f64>);

impl FisherMatrix {
    pub fn is_positive_definite(&self) -> bool {
        self.0.cholesky().is_some()
    }

    pub fn solve(&self, rhs: &Vector4<f64>) -> Result<Vector4<f64>, QuarticError> {
        let chol = self.0.cholesky().ok_or(QuarticError::FisherNotPd)?;
        Ok(chol.solve(rhs))
    }
}

fn covariance_of_powers(m: &[f64; 9]) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| m[i + j + 2] - m[i + 1] * m[j + 1])
}

/// Fisher matrix of the family at moments `eta`; errors when Cholesky fails.
pub fn quartic_fisher(eta: &[f64; 9]) -> Result<FisherMatrix, QuarticError> {
    let g = FisherMatrix(covariance_of_powers(eta));
    if g.is_positive_definite() {
        Ok(g)
    } else {
        Err(QuarticError::FisherNotPd)
    }
}

/// Scalar drift `b(x) = Σ Δx_k p_k(x)` and diffusion `s(x) = Σ Δx_k² p_k(x)/scale`
/// of the diffusion approximation, with `p_k(x) = h_k(scale·x)/scale`.
/// Ascending coefficient vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticModel {
    pub scale: f64,
    pub drift: Vec<f64>,
    pub diffusion: Vec<f64>,
}

impl QuarticModel {
    pub fn new(net: &ReactionNetwork, scale: f64) -> Result<Self, QuarticError> {
        if net.n_species() != 1 {
            return Err(QuarticError::NotUnivariate(net.n_species()));
        }
        let a = &net.net_effect_matrix().0;
        let mut drift = vec![0.0; 4];
        let mut diffusion = vec![0.0; 4];
        for (j, p) in net.scaled_propensity_polynomials(scale).iter().enumerate() {
            let d = a[(0, j)] as f64;
            for (k, c) in p.univariate_coefficients().into_iter().enumerate() {
                if k >= drift.len() {
                    drift.resize(k + 1, 0.0);
                    diffusion.resize(k + 1, 0.0);
                }
                drift[k] += d * c;
                diffusion[k] += d * d * c / scale;
            }
        }
        Ok(Self {
            scale,
            drift,
            diffusion,
        })
    }

    /// Count-scale model.
    pub fn counts(net: &ReactionNetwork) -> Result<Self, QuarticError> {
        Self::new(net, 1.0)
    }

    /// Concentration-scale model, `z = x/Ω`.
    pub fn concentration(net: &ReactionNetwork) -> Result<Self, QuarticError> {
        Self::new(net, net.omega())
    }

    /// `E[L xʲ]` for `j = 1..4` from raw moments.
    pub fn expect_generator(&self, eta: &[f64]) -> Result<[f64; 4], QuarticError> {
        generator_moments(&self.drift, &self.diffusion, eta, 1.0)
    }
}

/// `E[L uᵏ] = (k/w)·E[b uᵏ⁻¹] + k(k−1)/(2w²)·E[s uᵏ⁻²]`, with `b`, `s`
/// already expressed in `u` and `nu` the moments of `u`.
fn generator_moments(b: &[f64], s: &[f64], nu: &[f64], w: f64) -> Result<[f64; 4], QuarticError> {
    let mut out = [0.0; 4];
    for (idx, o) in out.iter_mut().enumerate() {
        let k = idx + 1;
        let mut first = 0.0;
        for (d, &c) in b.iter().enumerate() {
            if c != 0.0 {
                first += c * moment(nu, d + k - 1)?;
            }
        }
        let mut second = 0.0;
        if k >= 2 {
            for (d, &c) in s.iter().enumerate() {
                if c != 0.0 {
                    second += c * moment(nu, d + k - 2)?;
                }
            }
        }
        *o = k as f64 / w * first + (k * (k - 1)) as f64 / (2.0 * w * w) * second;
    }
    Ok(out)
}

fn moment(nu: &[f64], i: usize) -> Result<f64, QuarticError> {
    nu.get(i)
        .copied()
        .ok_or_else(|| QuarticError::Quadrature(format!("moment of order {i} not available")))
}

/// Coefficients of `p(c + w u)` in powers of `u`.
fn compose_affine(p: &[f64], c: f64, w: f64) -> Vec<f64> {
    let mut out = vec![0.0; p.len()];
    for (d, &coef) in p.iter().enumerate() {
        if coef == 0.0 {
            continue;
        }
        let mut binom = 1.0;
        for j in 0..=d {
            out[j] += coef * binom * c.powi((d - j) as i32) * w.powi(j as i32);
            binom = binom * (d - j) as f64 / (j + 1) as f64;
        }
    }
    out
}

/// `E[L c(x)]` at raw moments `eta`, count scale.
pub fn quartic_expect_lc(net: &ReactionNetwork, eta: &[f64; 9]) -> Result<[f64; 4], QuarticError> {
    QuarticModel::counts(net)?.expect_generator(eta)
}

/// Rows give `uᵏ`, `u = (x − c)/w`, in the basis `x..x⁴` (constants dropped):
/// `T_kj = C(k, j)(−c)^{k−j}/wᵏ`.
fn centring(c: f64, w: f64) -> Matrix4<f64> {
    let mut t = Matrix4::zeros();
    for k in 1..=4usize {
        let mut binom = 1.0;
        for j in 0..=k {
            if j >= 1 {
                t[(k - 1, j - 1)] = binom * (-c).powi((k - j) as i32) / w.powi(k as i32);
            }
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    t
}

/// `dθ/dt = g(θ)⁻¹ E[L c]`.
///
/// Evaluated in the statistics `uᵏ`, `u = (x − c)/w` centred on the
/// density's support; this is a linear reparametrization of `c(x)`, so the
/// projected vector field is the same while the Fisher matrix stays well
/// conditioned. The result is mapped back to θ.
pub fn quartic_drift(model: &QuarticModel, state: &QuarticState) -> Result<[f64; 4], QuarticError> {
    let QuarticMoments {
        center: c,
        width: w,
        nu,
        ..
    } = state.frame;
    let b = compose_affine(&model.drift, c, w);
    let s = compose_affine(&model.diffusion, c, w);
    if b.iter().all(|&v| v == 0.0) && s.iter().all(|&v| v == 0.0) {
        return Ok([0.0; 4]);
    }
    let lc = generator_moments(&b, &s, &nu, w)?;
    let g = FisherMatrix(covariance_of_powers(&nu));
    let dtilde = g.solve(&Vector4::from_column_slice(&lc))?;
    let dtheta: [f64; 4] = (centring(c, w).transpose() * dtilde).into();
    if dtheta.iter().all(|v| v.is_finite()) {
        Ok(dtheta)
    } else {
        Err(QuarticError::NotIntegrable("non-finite drift".into()))
    }
}

/// Conjugate Bayes update for `y ~ N(G x, V)`; θ₃, θ₄ are untouched.
pub fn quartic_correct(state: &QuarticState, y: f64, g: f64, v: f64) -> Result<QuarticState, QuarticError> {
    let [t1, t2, t3, t4] = state.theta;
    QuarticState::new([t1 + g * y / v, t2 - g * g / (2.0 * v), t3, t4])
}

/// Parameters after the conjugate update, without recomputing moments.
pub fn quartic_correct_theta(theta: [f64; 4], y: f64, g: f64, v: f64) -> [f64; 4] {
    [theta[0] + g * y / v, theta[1] - g * g / (2.0 * v), theta[2], theta[3]]
}

/// Global mode of the density.
pub fn quartic_map(theta: [f64; 4]) -> f64 {
    QuarticExponent(theta).argmax().0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::gaussian::gpf_drift;
    use crate::gaussmoments::GaussianState;
    use crate::netmodel::{library, parse_network};
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    /// Composite trapezoid over [-8, 8] with 2·10⁶ panels; unrelated to the
    /// adaptive rule under test.
    fn trapezoid_moments(theta: [f64; 4]) -> [f64; 9] {
        let f = QuarticExponent(theta);
        let (a, b) = (-8.0, 8.0);
        let n = 2_000_000;
        let h = (b - a) / n as f64;
        let fmax = f.argmax().1;
        let mut acc = [0.0; 9];
        for i in 0..=n {
            let x = a + i as f64 * h;
            let wgt = if i == 0 || i == n { 0.5 } else { 1.0 };
            let e = wgt * (f.value(x) - fmax).exp();
            let mut p = e;
            for v in acc.iter_mut() {
                *v += p;
                p *= x;
            }
        }
        let i0 = acc[0];
        acc.map(|v| v / i0)
    }

    #[test]
    fn base_integrals_near_gaussian() {
        let b = quartic_base_integrals([0.0, -0.5, 0.0, -1e-9]).unwrap();
        assert!(b.eta[1].abs() < 1e-6);
        assert!((b.eta[2] - 1.0).abs() < 1e-4);
        let i = b.integrals();
        assert!((i[0] - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-5);
    }

    #[test]
    fn symmetric_density_has_zero_mean() {
        let st = QuarticState::new([0.0, 0.7, 0.0, -0.3]).unwrap();
        assert!(st.eta[1].abs() < 1e-12, "{}", st.eta[1]);
    }

    #[test]
    fn bimodal_second_moment_matches_trapezoid() {
        let theta = [0.0, 3.0, 0.0, -1.0];
        let oracle = trapezoid_moments(theta);
        let b = quartic_base_integrals(theta).unwrap();
        assert!((b.eta[2] - oracle[2]).abs() < 1e-8 * oracle[2]);
        let st = QuarticState::new(theta).unwrap();
        for k in 3..9 {
            assert!(
                (st.eta[k] - oracle[k]).abs() <= 1e-8 * oracle[k].abs().max(1.0),
                "k={k}"
            );
        }
    }

    #[test]
    fn recursion_gaussian_fourth_moment() {
        let theta = [0.0, -0.5, 0.0, -1e-6];
        let b = quartic_base_integrals(theta).unwrap();
        let hi = quartic_moment_recursion(theta, b.eta).unwrap();
        assert!((hi[1] - 3.0).abs() < 1e-3, "η₄ = {}", hi[1]);
    }

    #[test]
    fn recursion_odd_moments_vanish_for_even_density() {
        let theta = [0.0, 3.0, 0.0, -1.0];
        let b = quartic_base_integrals(theta).unwrap();
        let hi = quartic_moment_recursion(theta, b.eta).unwrap();
        for &odd in &[hi[0], hi[2], hi[4]] {
            assert!(odd.abs() < 1e-9, "{odd}");
        }
    }

    #[test]
    fn recursion_matches_quadrature_on_bimodal() {
        let theta = [0.0, 3.0, 0.0, -1.0];
        let oracle = trapezoid_moments(theta);
        let b = quartic_base_integrals(theta).unwrap();
        let hi = quartic_moment_recursion(theta, b.eta).unwrap();
        for (k, v) in hi.iter().enumerate() {
            let want = oracle[k + 3];
            assert!(
                (v - want).abs() <= 1e-6 * want.abs().max(1.0),
                "η{} {v} vs {want}",
                k + 3
            );
        }
    }

    #[test]
    fn recursion_rejects_vanishing_quartic() {
        assert!(matches!(
            quartic_moment_recursion([0.0, -0.5, 0.0, -1e-13], [1.0, 0.0, 1.0]),
            Err(QuarticError::IllConditioned(_))
        ));
    }

    #[test]
    fn fisher_near_gaussian() {
        let st = QuarticState::new([0.0, -0.5, 0.0, -1e-9]).unwrap();
        let g = quartic_fisher(&st.eta).unwrap();
        assert!((g.0[(0, 0)] - 1.0).abs() < 1e-4);
        assert_eq!(g.0, g.0.transpose());
    }

    #[test]
    fn fisher_matches_covariance_of_powers() {
        let theta = [0.0, 3.0, 0.0, -1.0];
        let st = QuarticState::new(theta).unwrap();
        let g = quartic_fisher(&st.eta).unwrap();
        let m = trapezoid_moments(theta);
        for i in 0..4 {
            for j in 0..4 {
                let want = m[i + j + 2] - m[i + 1] * m[j + 1];
                assert!((g.0[(i, j)] - want).abs() <= 1e-6 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn generator_for_pure_death() {
        let net = parse_network("species: X\nreaction d: X -> 0 @ rate=0.7").unwrap();
        let eta = QuarticState::new([1.0, -0.5, 0.1, -0.05]).unwrap().eta;
        let lc = quartic_expect_lc(&net, &eta).unwrap();
        assert!((lc[0] + 0.7 * eta[1]).abs() < 1e-14);
    }

    #[test]
    fn generator_for_immigration_death() {
        let (k1, k2) = (10.0, 1.0);
        let net = library::immigration_death(k1, k2);
        let eta = QuarticState::new([2.0, -0.2, 0.01, -0.001]).unwrap().eta;
        let lc = quartic_expect_lc(&net, &eta).unwrap();
        assert!((lc[0] - (k1 - k2 * eta[1])).abs() < 1e-12);
        let want2 = 2.0 * (k1 * eta[1] - k2 * eta[2]) + (k1 + k2 * eta[1]);
        assert!((lc[1] - want2).abs() < 1e-12 * want2.abs());
    }

    #[test]
    fn generator_matches_finite_difference_action() {
        // E[L φ] with L φ = b φ' + s φ''/2, derivatives by central differences
        let net = library::bistable(1.0, [0.3, 0.2, 0.1, 0.01]);
        let model = QuarticModel::counts(&net).unwrap();
        let theta = [0.8, -0.3, 0.02, -0.004];
        let st = QuarticState::new(theta).unwrap();
        let lc = model.expect_generator(&st.eta).unwrap();
        let poly = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, &v| acc * x + v);
        let f = QuarticExponent(theta);
        let fmax = f.argmax().1;
        let (a, b, n) = (-10.0, 14.0, 400_000);
        let hstep = (b - a) / n as f64;
        for j in 1..=4i32 {
            let phi = |x: f64| x.powi(j);
            let d = 1e-3;
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..=n {
                let x = a + i as f64 * hstep;
                let wgt = (f.value(x) - fmax).exp();
                let d1 = (phi(x + d) - phi(x - d)) / (2.0 * d);
                let d2 = (phi(x + d) - 2.0 * phi(x) + phi(x - d)) / (d * d);
                num += wgt * (poly(&model.drift, x) * d1 + 0.5 * poly(&model.diffusion, x) * d2);
                den += wgt;
            }
            let want = num / den;
            let got = lc[j as usize - 1];
            assert!(
                (got - want).abs() <= 1e-4 * want.abs().max(1.0),
                "j={j}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn zero_rate_network_has_zero_drift() {
        let net = library::immigration_death(10.0, 1.0)
            .with_rate_constants(&[0.0, 0.0])
            .unwrap();
        let model = QuarticModel::counts(&net).unwrap();
        let st = QuarticState::new([1.0, -0.5, 0.0, -0.01]).unwrap();
        assert_eq!(quartic_drift(&model, &st).unwrap(), [0.0; 4]);
    }

    #[test]
    fn drift_agrees_with_raw_fisher_formula() {
        let net = library::bistable(1.0, [0.3, 0.2, 0.1, 0.01]);
        let model = QuarticModel::counts(&net).unwrap();
        let st = QuarticState::new([0.8, -0.3, 0.02, -0.004]).unwrap();
        let got = quartic_drift(&model, &st).unwrap();
        let g = quartic_fisher(&st.eta).unwrap();
        let lc = model.expect_generator(&st.eta).unwrap();
        let want = g.solve(&Vector4::from_column_slice(&lc)).unwrap();
        for k in 0..4 {
            assert!(
                (got[k] - want[k]).abs() <= 1e-6 * want[k].abs().max(1e-3),
                "k={k}: {} vs {}",
                got[k],
                want[k]
            );
        }
    }

    #[test]
    fn near_gaussian_drift_matches_gpf() {
        let net = library::immigration_death(10.0, 1.0);
        let model = QuarticModel::counts(&net).unwrap();
        let (mu, q) = (7.0, 4.0);
        let theta = [mu / q, -0.5 / q, 0.0, -1e-8];
        let st = QuarticState::new(theta).unwrap();
        let dtheta = quartic_drift(&model, &st).unwrap();
        let g = quartic_fisher(&st.eta).unwrap();
        let deta = g.0 * Vector4::from_column_slice(&dtheta);
        let dmu = deta[0];
        let dq = deta[1] - 2.0 * st.eta[1] * deta[0];
        let gs = GaussianState::new(
            DVector::from_element(1, st.eta[1]),
            DMatrix::from_element(1, 1, st.variance()),
        )
        .unwrap();
        let (gmu, gq) = gpf_drift(&net, &gs).unwrap();
        assert!((dmu - gmu[0]).abs() < 1e-4, "{dmu} vs {}", gmu[0]);
        assert!((dq - gq[(0, 0)]).abs() < 1e-4, "{dq} vs {}", gq[(0, 0)]);
    }

    #[test]
    fn multispecies_rejected() {
        let net = library::limit_cycle_default();
        assert_eq!(QuarticModel::counts(&net).unwrap_err(), QuarticError::NotUnivariate(3));
    }

    #[test]
    fn correction_examples() {
        let st = QuarticState::new([1.0, -1.0, 0.0, -0.1]).unwrap();
        let up = quartic_correct(&st, 4.0, 1.0, 2.0).unwrap();
        assert_eq!(up.theta, [3.0, -1.25, 0.0, -0.1]);
        let flat = quartic_correct(&st, 4.0, 1.0, f64::INFINITY).unwrap();
        assert_eq!(flat.theta, st.theta);
    }

    #[test]
    fn map_examples() {
        assert_eq!(quartic_map([0.0, -0.5, 0.0, -0.01]), 0.0);
        assert!((quartic_map([0.0, 3.0, 0.0, -1.0]) + 1.5f64.sqrt()).abs() < 1e-12);
        let x = quartic_map([1.0, 3.0, 0.0, -1.0]);
        assert!(x > 1.0, "{x}");
        let f = QuarticExponent([1.0, 3.0, 0.0, -1.0]);
        assert!(f.derivative(x).abs() < 1e-12);
    }

    fn valid_theta() -> impl Strategy<Value = [f64; 4]> {
        (-2.0f64..2.0, -2.0f64..2.0, -1.0f64..1.0, -2.0f64..-0.2).prop_map(|(a, b, c, d)| [a, b, c, d])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn corrections_commute(theta in valid_theta(), ya in -5.0f64..5.0, yb in -5.0f64..5.0, v in 0.1f64..10.0) {
            let ab = quartic_correct_theta(quartic_correct_theta(theta, ya, 1.3, v), yb, 1.3, v);
            let ba = quartic_correct_theta(quartic_correct_theta(theta, yb, 1.3, v), ya, 1.3, v);
            prop_assert!((ab[0] - ba[0]).abs() <= 1e-12 * ab[0].abs().max(1.0));
            prop_assert_eq!(ab[1], ba[1]);
            prop_assert_eq!(&ab[2..], &theta[2..]);
        }

        #[test]
        fn fisher_is_positive_definite(theta in valid_theta()) {
            let st = QuarticState::new(theta).unwrap();
            prop_assert!(quartic_fisher(&st.eta).is_ok());
        }

        #[test]
        fn map_is_global_maximum(theta in valid_theta()) {
            let f = QuarticExponent(theta);
            let x = quartic_map(theta);
            for i in -400..=400 {
                let z = i as f64 * 0.01;
                prop_assert!(f.value(z) <= f.value(x) + 1e-9);
            }
        }
    }
}
