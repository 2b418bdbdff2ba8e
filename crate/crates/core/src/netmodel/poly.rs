//! Sparse multivariate polynomials with real coefficients.
//!
//! Terms are kept in a `BTreeMap` keyed by exponent vector, so iteration and
//! evaluation always run in ascending multi-index order.

use std::collections::BTreeMap;
use std::fmt;

/// Exponent vector of a monomial, one entry per variable.
pub type MultiIndex = Vec<u32>;

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::monomial(vec![0; nvars], c)
    }

    pub fn monomial(alpha: MultiIndex, c: f64) -> Self {
        let mut p = Self::zero(alpha.len());
        p.add_term(alpha, c);
        p
    }

    /// The polynomial `x_var - shift`.
    pub fn shifted_variable(nvars: usize, var: usize, shift: f64) -> Self {
        let mut alpha = vec![0; nvars];
        alpha[var] = 1;
        let mut p = Self::monomial(alpha, 1.0);
        p.add_term(vec![0; nvars], -shift);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Iterates `(multi-index, coefficient)` in ascending multi-index order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> + '_ {
        self.terms.iter().map(|(a, &c)| (a, c))
    }

    pub fn coefficient(&self, alpha: &[u32]) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|a| a.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, alpha: MultiIndex, c: f64) {
        assert_eq!(alpha.len(), self.nvars, "multi-index length mismatch");
        if c == 0.0 {
            return;
        }
        match self.terms.get_mut(&alpha) {
            Some(v) => {
                *v += c;
                if *v == 0.0 {
                    self.terms.remove(&alpha);
                }
            }
            None => {
                self.terms.insert(alpha, c);
            }
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (a, c) in other.terms() {
            out.add_term(a.clone(), c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (a, c) in self.terms() {
            out.add_term(a.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                let alpha = a.iter().zip(b).map(|(x, y)| x + y).collect();
                out.add_term(alpha, ca * cb);
            }
        }
        out
    }

    /// Formal partial derivative with respect to `var`.
    pub fn derivative(&self, var: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (a, c) in self.terms() {
            if a[var] == 0 {
                continue;
            }
            let mut alpha = a.clone();
            alpha[var] -= 1;
            out.add_term(alpha, c * f64::from(a[var]));
        }
        out
    }

    /// `p(s·z) / s`: the change of variables from counts to concentrations.
    pub fn rescaled(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (a, c) in self.terms() {
            let deg: u32 = a.iter().sum();
            out.add_term(a.clone(), c * s.powi(deg as i32 - 1));
        }
        out
    }

    /// Keeps only the terms of total degree `deg`.
    pub fn homogeneous_part(&self, deg: u32) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (a, c) in self.terms() {
            if a.iter().sum::<u32>() == deg {
                out.add_term(a.clone(), c);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        self.terms()
            .map(|(a, c)| a.iter().zip(x).fold(c, |acc, (&e, &xi)| acc * xi.powi(e as i32)))
            .sum()
    }

    /// Coefficients of a univariate polynomial, index = power.
    pub fn univariate_coefficients(&self) -> Vec<f64> {
        assert_eq!(self.nvars, 1, "not a univariate polynomial");
        let mut out = vec![0.0; self.degree() as usize + 1];
        for (a, c) in self.terms() {
            out[a[0] as usize] += c;
        }
        out
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (a, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (i, &e) in a.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*x{}", i + 1)?,
                    _ => write!(f, "*x{}^{}", i + 1, e)?,
                }
            }
        }
        Ok(())
    }
}

/// Integer coefficients of the falling factorial `x(x-1)...(x-k+1)`, index = power.
pub fn falling_factorial_coefficients(k: u32) -> Vec<i64> {
    let mut coeffs = vec![1i64];
    for r in 0..k as i64 {
        let mut next = vec![0i64; coeffs.len() + 1];
        for (p, &c) in coeffs.iter().enumerate() {
            next[p + 1] += c;
            next[p] -= r * c;
        }
        coeffs = next;
    }
    coeffs
}
