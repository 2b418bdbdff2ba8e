//! Reaction-network definitions: stoichiometry, mass-action propensities and
//! their polynomial forms, and the count/concentration rescaling.

mod parse;
pub mod poly;

pub use parse::{parse_network, parse_network_with_omega, serialize_network};
pub use poly::{MultiIndex, Polynomial};

use nalgebra::DMatrix;
use thiserror::Error;

/// Highest supported reaction order (sum of reactant coefficients).
pub const MAX_ORDER: u32 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: unknown species `{name}`")]
    UnknownSpecies { line: usize, name: String },
    #[error("line {line}: rate constant must be positive, got {value}")]
    NonpositiveRate { line: usize, value: f64 },
    #[error("reaction `{label}` has order {order}; at most {MAX_ORDER} is supported")]
    OrderTooHigh { label: String, order: u32 },
    #[error("line {line}: rate_scaled requires an omega declaration")]
    MissingOmega { line: usize },
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error("state component {index} is negative ({value})")]
    NegativeState { index: usize, value: i64 },
}

/// Propensity convention for multi-molecule reactants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Convention {
    /// `k · x(x-1)...(x-ν+1)`, as used by the benchmark networks.
    #[default]
    Falling,
    /// `k · C(x, ν)`.
    Binomial,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reaction {
    pub label: String,
    /// Reactant coefficients ν⁻, one per species.
    pub reactants: Vec<u32>,
    /// Product coefficients ν⁺, one per species.
    pub products: Vec<u32>,
    /// Count-scale rate constant.
    pub rate_constant: f64,
}

impl Reaction {
    pub fn order(&self) -> u32 {
        self.reactants.iter().sum()
    }
}

/// Direction of the rate-constant rescaling `k̃ = Ω^(order-1) k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RescaleDirection {
    /// Count scale `k` to concentration scale `k̃`.
    ToConcentration,
    /// Concentration scale `k̃` back to count scale `k`.
    ToCount,
}

/// Integer n×m matrix of net effects `ν⁺ - ν⁻`.
#[derive(Clone, Debug, PartialEq)]
pub struct NetEffectMatrix(pub DMatrix<i64>);

impl NetEffectMatrix {
    pub fn to_f64(&self) -> DMatrix<f64> {
        self.0.map(|v| v as f64)
    }

    pub fn column(&self, j: usize) -> Vec<i64> {
        self.0.column(j).iter().copied().collect()
    }
}

/// A validated mass-action network. Immutable once built; the polynomial
/// forms of the propensities and their Jacobians are computed up front.
#[derive(Clone, Debug)]
pub struct ReactionNetwork {
    species: Vec<String>,
    reactions: Vec<Reaction>,
    omega: f64,
    convention: Convention,
    net_effect: NetEffectMatrix,
    propensity_polys: Vec<Polynomial>,
    jacobian_polys: Vec<Vec<Polynomial>>,
}

impl PartialEq for ReactionNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.species == other.species
            && self.reactions == other.reactions
            && self.omega == other.omega
            && self.convention == other.convention
    }
}

impl ReactionNetwork {
    pub fn new(
        species: Vec<String>,
        reactions: Vec<Reaction>,
        omega: f64,
        convention: Convention,
    ) -> Result<Self, NetError> {
        let n = species.len();
        if n == 0 {
            return Err(NetError::Invalid("no species declared".into()));
        }
        if reactions.is_empty() {
            return Err(NetError::Invalid("no reactions declared".into()));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(NetError::Invalid(format!("omega must be positive, got {omega}")));
        }
        for r in &reactions {
            if r.reactants.len() != n || r.products.len() != n {
                return Err(NetError::Invalid(format!(
                    "reaction `{}` does not cover all {n} species",
                    r.label
                )));
            }
            if !(r.rate_constant >= 0.0 && r.rate_constant.is_finite()) {
                return Err(NetError::Invalid(format!(
                    "reaction `{}` has invalid rate {}",
                    r.label, r.rate_constant
                )));
            }
            if r.order() > MAX_ORDER {
                return Err(NetError::OrderTooHigh {
                    label: r.label.clone(),
                    order: r.order(),
                });
            }
        }

        let m = reactions.len();
        let net_effect = NetEffectMatrix(DMatrix::from_fn(n, m, |i, j| {
            i64::from(reactions[j].products[i]) - i64::from(reactions[j].reactants[i])
        }));
        let propensity_polys: Vec<Polynomial> =
            reactions.iter().map(|r| propensity_polynomial(r, convention)).collect();
        let jacobian_polys = propensity_polys
            .iter()
            .map(|p| (0..n).map(|i| p.derivative(i)).collect())
            .collect();

        Ok(Self {
            species,
            reactions,
            omega,
            convention,
            net_effect,
            propensity_polys,
            jacobian_polys,
        })
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    /// Number of species `n`.
    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    /// Number of reactions `m`.
    pub fn n_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn rate_constants(&self) -> Vec<f64> {
        self.reactions.iter().map(|r| r.rate_constant).collect()
    }

    pub fn max_order(&self) -> u32 {
        self.reactions.iter().map(Reaction::order).max().unwrap_or(0)
    }

    pub fn net_effect_matrix(&self) -> &NetEffectMatrix {
        &self.net_effect
    }

    /// Same network with a different scale factor; count-scale rates are kept.
    pub fn with_omega(&self, omega: f64) -> Result<Self, NetError> {
        Self::new(self.species.clone(), self.reactions.clone(), omega, self.convention)
    }

    /// Same network with every rate constant replaced.
    pub fn with_rate_constants(&self, rates: &[f64]) -> Result<Self, NetError> {
        if rates.len() != self.reactions.len() {
            return Err(NetError::Invalid("rate vector length mismatch".into()));
        }
        let reactions = self
            .reactions
            .iter()
            .zip(rates)
            .map(|(r, &k)| Reaction {
                rate_constant: k,
                ..r.clone()
            })
            .collect();
        Self::new(self.species.clone(), reactions, self.omega, self.convention)
    }

    /// Mass-action propensities at an integer state, evaluated exactly by
    /// products of falling factorials.
    pub fn propensity(&self, x: &[i64]) -> Result<Vec<f64>, NetError> {
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, &v)| v < 0) {
            return Err(NetError::NegativeState { index, value });
        }
        let mut out = vec![0.0; self.reactions.len()];
        self.propensity_into(x, &mut out);
        Ok(out)
    }

    /// Unchecked variant for the simulation hot loop; `x` must be nonnegative.
    pub(crate) fn propensity_into(&self, x: &[i64], out: &mut [f64]) {
        for (h, r) in out.iter_mut().zip(&self.reactions) {
            let mut value = r.rate_constant;
            for (&xi, &nu) in x.iter().zip(&r.reactants) {
                for q in 0..i64::from(nu) {
                    value *= (xi - q) as f64;
                }
                if self.convention == Convention::Binomial {
                    value /= factorial(nu);
                }
            }
            // xi < nu makes one factor zero; clamp the -0.0 that can leave
            *h = if value > 0.0 { value } else { 0.0 };
        }
    }

    /// Propensities evaluated through their polynomial extension at a real point.
    pub fn propensity_real(&self, x: &[f64]) -> Vec<f64> {
        self.propensity_polys.iter().map(|p| p.eval(x)).collect()
    }

    /// Exact m×n Jacobian of the polynomial propensities at a real point.
    pub fn propensity_jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let (m, n) = (self.n_reactions(), self.n_species());
        DMatrix::from_fn(m, n, |j, i| self.jacobian_polys[j][i].eval(x))
    }

    /// Expanded propensity polynomials `h_j(x)`.
    pub fn propensity_polynomials(&self) -> &[Polynomial] {
        &self.propensity_polys
    }

    /// `∂h_j/∂x_i` as polynomials, indexed `[j][i]`.
    pub fn jacobian_polynomials(&self) -> &[Vec<Polynomial>] {
        &self.jacobian_polys
    }

    /// `h_j(s·z)/s` for every reaction: the propensities seen in a frame
    /// where the state is measured in units of `s` molecules.
    pub fn scaled_propensity_polynomials(&self, s: f64) -> Vec<Polynomial> {
        self.propensity_polys.iter().map(|p| p.rescaled(s)).collect()
    }

    pub fn rescale_rate_constants(&self, direction: RescaleDirection) -> Vec<f64> {
        self.reactions
            .iter()
            .map(|r| {
                let factor = self.omega.powi(r.order() as i32 - 1);
                match direction {
                    RescaleDirection::ToConcentration => factor * r.rate_constant,
                    RescaleDirection::ToCount => r.rate_constant / factor,
                }
            })
            .collect()
    }

    /// Concentration-scale propensities in the thermodynamic limit: falling
    /// factorials become plain powers, `h̃_j(z) = k̃_j ∏ z_i^ν` (over `ν!` for
    /// the binomial convention).
    pub fn limit_propensity_polynomials(&self) -> Vec<Polynomial> {
        self.reactions
            .iter()
            .zip(&self.propensity_polys)
            .map(|(r, p)| p.rescaled(self.omega).homogeneous_part(r.order()))
            .collect()
    }

    /// Right-hand side of the rate equation, `A h̃(z)`.
    pub fn rate_equation_rhs(&self, z: &[f64]) -> Vec<f64> {
        let polys = self.limit_propensity_polynomials();
        let h: Vec<f64> = polys.iter().map(|p| p.eval(z)).collect();
        self.apply_net_effect(&h)
    }

    /// `A v` for a reaction-indexed vector `v`.
    pub fn apply_net_effect(&self, v: &[f64]) -> Vec<f64> {
        let a = &self.net_effect.0;
        (0..self.n_species())
            .map(|i| (0..self.n_reactions()).map(|j| a[(i, j)] as f64 * v[j]).sum())
            .collect()
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn propensity_polynomial(r: &Reaction, convention: Convention) -> Polynomial {
    let n = r.reactants.len();
    let mut p = Polynomial::constant(n, r.rate_constant);
    for (i, &nu) in r.reactants.iter().enumerate() {
        let coeffs = poly::falling_factorial_coefficients(nu);
        let mut factor = Polynomial::zero(n);
        for (power, &c) in coeffs.iter().enumerate() {
            let mut alpha = vec![0; n];
            alpha[i] = power as u32;
            factor.add_term(alpha, c as f64);
        }
        if convention == Convention::Binomial {
            factor = factor.scale(1.0 / factorial(nu));
        }
        p = p.mul(&factor);
    }
    p
}

/// Networks used throughout the examples and tests.
pub mod library {
    use super::*;

    /// Single-species bistable network: ∅⇄X, 2X⇄3X, given concentration-scale rates.
    pub fn bistable(omega: f64, scaled_rates: [f64; 4]) -> ReactionNetwork {
        let text = format!(
            "species: X\nomega: {omega}\n\
             reaction r1: 0 -> X @ rate_scaled={}\n\
             reaction r2: X -> 0 @ rate_scaled={}\n\
             reaction r3: 2 X -> 3 X @ rate_scaled={}\n\
             reaction r4: 3 X -> 2 X @ rate_scaled={}\n",
            scaled_rates[0], scaled_rates[1], scaled_rates[2], scaled_rates[3]
        );
        parse_network(&text).expect("bistable network text is valid")
    }

    /// The bistable benchmark at Ω=100 with k̃ = (22.5, 37.5, 18, 2.5).
    pub fn bistable_default() -> ReactionNetwork {
        bistable(100.0, [22.5, 37.5, 18.0, 2.5])
    }

    /// Three-species oscillator: X1→2X1, X1+X2→X2, X2→∅, X1→X3, X3→X2.
    pub fn limit_cycle(omega: f64, scaled_rates: [f64; 5]) -> ReactionNetwork {
        let text = format!(
            "species: X1, X2, X3\nomega: {omega}\n\
             reaction r1: X1 -> 2 X1 @ rate_scaled={}\n\
             reaction r2: X1 + X2 -> X2 @ rate_scaled={}\n\
             reaction r3: X2 -> 0 @ rate_scaled={}\n\
             reaction r4: X1 -> X3 @ rate_scaled={}\n\
             reaction r5: X3 -> X2 @ rate_scaled={}\n",
            scaled_rates[0], scaled_rates[1], scaled_rates[2], scaled_rates[3], scaled_rates[4]
        );
        parse_network(&text).expect("limit-cycle network text is valid")
    }

    /// The oscillator benchmark at Ω=100 with k̃ = (3.1, 1, 1, 1, 1).
    pub fn limit_cycle_default() -> ReactionNetwork {
        limit_cycle(100.0, [3.1, 1.0, 1.0, 1.0, 1.0])
    }

    /// ∅→X at rate `k1`, X→∅ at rate `k2` (count scale).
    pub fn immigration_death(k1: f64, k2: f64) -> ReactionNetwork {
        let text = format!("species: X\nreaction birth: 0 -> X @ rate={k1}\nreaction death: X -> 0 @ rate={k2}\n");
        parse_network(&text).expect("immigration-death text is valid")
    }
}
