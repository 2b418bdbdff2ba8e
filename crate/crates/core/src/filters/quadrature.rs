//! Numerical integration against `exp(θ₁x + θ₂x² + θ₃x³ + θ₄x⁴)`, θ₄ < 0.

/// Exponent values below `max - CUTOFF` are treated as zero mass.
pub const CUTOFF: f64 = 45.0;
/// Default absolute tolerance on the normalized integrands.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Number of moments `E[u^k]`, `k = 0..=8`, produced by one pass.
pub const N_MOMENTS: usize = 9;

const MAX_SPLITS: usize = 4096;
const INITIAL_PANELS: usize = 16;

/// Real roots of `c[0] + c[1]x + c[2]x² + c[3]x³`, ascending, Newton-polished.
pub fn cubic_real_roots(c: [f64; 4]) -> Vec<f64> {
    let eval = |x: f64| ((c[3] * x + c[2]) * x + c[1]) * x + c[0];
    let deriv = |x: f64| (3.0 * c[3] * x + 2.0 * c[2]) * x + c[1];
    let mut roots = if c[3] == 0.0 {
        quadratic_real_roots(c[0], c[1], c[2])
    } else {
        let a = c[2] / c[3];
        let b = c[1] / c[3];
        let d = c[0] / c[3];
        let q = (a * a - 3.0 * b) / 9.0;
        let r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * d) / 54.0;
        let shift = a / 3.0;
        if r * r < q * q * q {
            let phi = (r / (q * q * q).sqrt()).clamp(-1.0, 1.0).acos();
            let m = -2.0 * q.sqrt();
            let tau = 2.0 * std::f64::consts::PI;
            vec![
                m * (phi / 3.0).cos() - shift,
                m * ((phi + tau) / 3.0).cos() - shift,
                m * ((phi - tau) / 3.0).cos() - shift,
            ]
        } else {
            let big = -r.signum() * (r.abs() + (r * r - q * q * q).sqrt()).cbrt();
            let small = if big == 0.0 { 0.0 } else { q / big };
            vec![big + small - shift]
        }
    };
    for x in roots.iter_mut() {
        for _ in 0..4 {
            let d = deriv(*x);
            if d == 0.0 {
                break;
            }
            let next = *x - eval(*x) / d;
            if !next.is_finite() || eval(next).abs() >= eval(*x).abs() {
                break;
            }
            *x = next;
        }
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    roots
}

fn quadratic_real_roots(c0: f64, c1: f64, c2: f64) -> Vec<f64> {
    if c2 == 0.0 {
        return if c1 == 0.0 { vec![] } else { vec![-c0 / c1] };
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    let mut r = vec![q / c2, c0 / q];
    r.sort_by(|a, b| a.total_cmp(b));
    r
}

/// The quartic exponent `f(x) = Σ θ_k x^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticExponent(pub [f64; 4]);

impl QuarticExponent {
    pub fn value(&self, x: f64) -> f64 {
        let t = &self.0;
        (((t[3] * x + t[2]) * x + t[1]) * x + t[0]) * x
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let t = &self.0;
        ((4.0 * t[3] * x + 3.0 * t[2]) * x + 2.0 * t[1]) * x + t[0]
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let t = &self.0;
        (12.0 * t[3] * x + 6.0 * t[2]) * x + 2.0 * t[1]
    }

    /// Real critical points, ascending.
    pub fn critical_points(&self) -> Vec<f64> {
        let t = &self.0;
        cubic_real_roots([t[0], 2.0 * t[1], 3.0 * t[2], 4.0 * t[3]])
    }

    /// Global maximizer; exact ties (within `1e-12·max(1,|f|)`) go to the
    /// smaller `x`. Requires θ₄ < 0.
    pub fn argmax(&self) -> (f64, f64) {
        let mut best: Option<(f64, f64)> = None;
        for x in self.critical_points() {
            let f = self.value(x);
            best = match best {
                None => Some((x, f)),
                Some((bx, bf)) => {
                    let tie = 1e-12 * bf.abs().max(1.0);
                    if f > bf + tie {
                        Some((x, f))
                    } else {
                        Some((bx, bf))
                    }
                }
            };
        }
        // a cubic with real coefficients always has a real root
        best.unwrap_or((0.0, 0.0))
    }
}

/// Quadrature output: moments of `u = (x - center)/width` under the
/// normalized density, and its log-normalizer in `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticMoments {
    pub center: f64,
    pub width: f64,
    pub log_norm: f64,
    pub nu: [f64; N_MOMENTS],
}

impl QuarticMoments {
    /// Raw moments `E[x^k]`, `k = 0..=8`, by binomial expansion of `x = c + w u`.
    pub fn raw_moments(&self) -> [f64; N_MOMENTS] {
        let mut eta = [0.0; N_MOMENTS];
        for (k, e) in eta.iter_mut().enumerate() {
            let mut binom = 1.0;
            let mut sum = 0.0;
            for j in 0..=k {
                sum += binom * self.center.powi((k - j) as i32) * self.width.powi(j as i32) * self.nu[j];
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
            *e = sum;
        }
        eta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuadratureError {
    NotIntegrable(String),
    NoConvergence { a: f64, b: f64 },
}

impl std::fmt::Display for QuadratureError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QuadratureError::NotIntegrable(m) => write!(f, "density not integrable: {m}"),
            QuadratureError::NoConvergence { a, b } => {
                write!(f, "adaptive quadrature did not converge on [{a}, {b}]")
            }
        }
    }
}

impl std::error::Error for QuadratureError {}

/// Bracket of `{ f ≥ fmax - CUTOFF }` (its convex hull).
fn superlevel_hull(f: &QuarticExponent, fmax: f64) -> (f64, f64) {
    let level = fmax - CUTOFF;
    let crit = f.critical_points();
    let above: Vec<usize> = (0..crit.len()).filter(|&i| f.value(crit[i]) >= level).collect();
    let first = above[0];
    let last = *above.last().unwrap();
    let step = |x: f64| {
        let curv = f.second_derivative(x).abs();
        let quartic = f.0[3].abs().powf(-0.25);
        let s = if curv > 0.0 {
            curv.sqrt().recip().min(quartic)
        } else {
            quartic
        };
        if s.is_finite() && s > 0.0 {
            s
        } else {
            1.0
        }
    };
    let below = |x: f64| f.value(x) < level;
    let lo = if first > 0 {
        bisect(crit[first - 1], crit[first], below)
    } else {
        let x0 = crit[first];
        let mut h = step(x0);
        while !below(x0 - h) {
            h *= 2.0;
        }
        bisect(x0 - h, x0, below)
    };
    let hi = if last + 1 < crit.len() {
        bisect_rev(crit[last], crit[last + 1], below)
    } else {
        let x0 = crit[last];
        let mut h = step(x0);
        while !below(x0 + h) {
            h *= 2.0;
        }
        bisect_rev(x0, x0 + h, below)
    };
    (lo, hi)
}

/// `below(a)` holds, `below(b)` does not; returns the crossing.
fn bisect(mut a: f64, mut b: f64, below: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if below(m) {
            a = m;
        } else {
            b = m;
        }
    }
    a
}

/// `below(a)` fails, `below(b)` holds; returns the crossing.
fn bisect_rev(mut a: f64, mut b: f64, below: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if below(m) {
            b = m;
        } else {
            a = m;
        }
    }
    b
}

type Vec9 = [f64; N_MOMENTS];

fn integrand(f: &QuarticExponent, fmax: f64, c: f64, w: f64, u: f64) -> Vec9 {
    let e = (f.value(c + w * u) - fmax).exp();
    let mut out = [0.0; N_MOMENTS];
    let mut p = e;
    for v in out.iter_mut() {
        *v = p;
        p *= u;
    }
    out
}

/// A panel with its Simpson estimate and the two-halves refinement;
/// `at` indexes the samples at `a, (a+m)/2, m, (m+b)/2, b`.
struct Panel {
    a: f64,
    b: f64,
    at: [usize; 5],
    refined: Vec9,
    err: f64,
}

/// Heap key: panel error, then index.
#[derive(PartialEq)]
struct Worst(f64, usize);

impl Eq for Worst {}

impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Worst {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

struct Adaptive<'a> {
    f: &'a QuarticExponent,
    fmax: f64,
    c: f64,
    w: f64,
    inv_scale: Vec9,
}

impl Adaptive<'_> {
    fn eval(&self, u: f64) -> Vec9 {
        integrand(self.f, self.fmax, self.c, self.w, u)
    }

    /// Samples at the ends and midpoint of `[a, b]` are `samples[ends.0]`,
    /// `samples[mid]`, `samples[ends.1]`; the quarter points are appended.
    fn panel(&self, samples: &mut Vec<Vec9>, a: f64, b: f64, ends: (usize, usize), mid: usize) -> Panel {
        let m = 0.5 * (a + b);
        let lq = samples.len();
        samples.push(self.eval(0.5 * (a + m)));
        samples.push(self.eval(0.5 * (m + b)));
        let (fa, flm, fm, frm, fb) = (
            &samples[ends.0],
            &samples[lq],
            &samples[mid],
            &samples[lq + 1],
            &samples[ends.1],
        );
        let (h1, h2) = ((b - a) / 6.0, (b - a) / 12.0);
        let mut err: f64 = 0.0;
        let mut refined = [0.0; N_MOMENTS];
        for k in 0..N_MOMENTS {
            let whole = h1 * (fa[k] + 4.0 * fm[k] + fb[k]);
            let s2 = h2 * (fa[k] + 4.0 * flm[k] + 2.0 * fm[k] + 4.0 * frm[k] + fb[k]);
            err = err.max((s2 - whole).abs() * self.inv_scale[k]);
            refined[k] = s2 + (s2 - whole) / 15.0;
        }
        Panel {
            a,
            b,
            at: [ends.0, lq, mid, lq + 1, ends.1],
            refined,
            err,
        }
    }

    /// Splits the worst panel until the summed Simpson error estimate
    /// `Σ|S₂ - S₁|/15` is within `tol`; returns the corrected sum.
    fn integrate(&self, samples: &mut Vec<Vec9>, mut panels: Vec<Panel>, tol: f64) -> Result<Vec9, QuadratureError> {
        let mut budget: f64 = panels.iter().map(|p| p.err).sum();
        let mut heap: std::collections::BinaryHeap<Worst> =
            panels.iter().enumerate().map(|(i, p)| Worst(p.err, i)).collect();
        let mut splits = 0usize;
        while budget > 15.0 * tol {
            let Worst(_, i) = heap.pop().expect("panel set is never empty");
            let (a, b, at, err) = (panels[i].a, panels[i].b, panels[i].at, panels[i].err);
            if splits >= MAX_SPLITS || b - a <= 4.0 * f64::EPSILON * a.abs().max(1.0) {
                return Err(QuadratureError::NoConvergence { a, b });
            }
            splits += 1;
            let m = 0.5 * (a + b);
            let left = self.panel(samples, a, m, (at[0], at[2]), at[1]);
            let right = self.panel(samples, m, b, (at[2], at[4]), at[3]);
            budget += left.err + right.err - err;
            heap.push(Worst(left.err, i));
            heap.push(Worst(right.err, panels.len()));
            panels[i] = left;
            panels.push(right);
        }
        let mut total = [0.0; N_MOMENTS];
        for p in &panels {
            for k in 0..N_MOMENTS {
                total[k] += p.refined[k];
            }
        }
        Ok(total)
    }
}

/// Moments `E[u^k]`, `k = 0..=8`, of the density ∝ `exp(f(x))` in the
/// centred variable `u = (x - c)/w`, where `[c - w√(2·CUTOFF), c + w√(2·CUTOFF)]`
/// is the superlevel hull (a Gaussian gets `c = μ`, `w = σ`).
///
/// Globally adaptive Simpson with Richardson correction; `tol` bounds the
/// summed error estimate of each normalized moment relative to `E|u|^k`.
pub fn quartic_moments(theta: [f64; 4], tol: f64) -> Result<QuarticMoments, QuadratureError> {
    if !theta.iter().all(|t| t.is_finite()) {
        return Err(QuadratureError::NotIntegrable("non-finite parameter".into()));
    }
    if !(theta[3] < 0.0) {
        return Err(QuadratureError::NotIntegrable(format!(
            "θ₄ = {} is not negative",
            theta[3]
        )));
    }
    let f = QuarticExponent(theta);
    let (_, fmax) = f.argmax();
    if !fmax.is_finite() {
        return Err(QuadratureError::NotIntegrable("exponent maximum is not finite".into()));
    }
    let (lo, hi) = superlevel_hull(&f, fmax);
    let half = (2.0 * CUTOFF).sqrt();
    let c = 0.5 * (lo + hi);
    let w = 0.5 * (hi - lo) / half;
    if !(w > 0.0 && w.is_finite()) {
        return Err(QuadratureError::NotIntegrable("degenerate support".into()));
    }

    let mut ad = Adaptive {
        f: &f,
        fmax,
        c,
        w,
        inv_scale: [1.0; N_MOMENTS],
    };
    let n = INITIAL_PANELS;
    let du = 2.0 * half / n as f64;
    let nodes: Vec<f64> = (0..=2 * n).map(|i| -half + 0.5 * du * i as f64).collect();
    let mut vals: Vec<Vec9> = Vec::with_capacity(8 * MAX_SPLITS.min(1024));
    vals.extend(nodes.iter().map(|&u| ad.eval(u)));
    let mut scale = [0.0; N_MOMENTS];
    for p in 0..n {
        let (a, b) = (nodes[2 * p], nodes[2 * p + 2]);
        for k in 0..N_MOMENTS {
            let abs =
                (b - a) / 6.0 * (vals[2 * p][k].abs() + 4.0 * vals[2 * p + 1][k].abs() + vals[2 * p + 2][k].abs());
            scale[k] += abs;
        }
    }
    let mass = scale[0];
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(QuadratureError::NotIntegrable("zero mass on the support".into()));
    }
    ad.inv_scale = scale.map(|s| 1.0 / s.max(mass * f64::EPSILON));

    let panels = (0..n)
        .map(|p| ad.panel(&mut vals, nodes[2 * p], nodes[2 * p + 2], (2 * p, 2 * p + 2), 2 * p + 1))
        .collect();
    let total = ad.integrate(&mut vals, panels, tol)?;
    let i0 = total[0];
    if !(i0 > 0.0) {
        return Err(QuadratureError::NotIntegrable("nonpositive normalizer".into()));
    }
    let nu = total.map(|v| v / i0);
    Ok(QuarticMoments {
        center: c,
        width: w,
        log_norm: fmax + (w * i0).ln(),
        nu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_roots_known() {
        // (x-1)(x-2)(x-3)
        let r = cubic_real_roots([-6.0, 11.0, -6.0, 1.0]);
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let r = cubic_real_roots([-1.0, 0.0, 0.0, 1.0]);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 1.0).abs() < 1e-14);
        // x³ + x has only the root 0
        assert_eq!(cubic_real_roots([0.0, 1.0, 0.0, 1.0]), vec![0.0]);
    }

    #[test]
    fn cubic_roots_with_tiny_leading_coefficient() {
        // -x - 4e-9 x³: single root at 0
        let r = cubic_real_roots([0.0, -1.0, 0.0, -4e-9]);
        assert_eq!(r.len(), 1);
        assert!(r[0].abs() < 1e-9);
        // 6x - 4x³: roots 0, ±√1.5
        let r = cubic_real_roots([0.0, 6.0, 0.0, -4.0]);
        assert_eq!(r.len(), 3);
        assert!((r[0] + 1.5f64.sqrt()).abs() < 1e-14);
        assert!(r[1].abs() < 1e-14);
    }

    #[test]
    fn gaussian_limit() {
        let m = quartic_moments([0.0, -0.5, 0.0, -1e-9], DEFAULT_TOL).unwrap();
        let eta = m.raw_moments();
        assert!((eta[0] - 1.0).abs() < 1e-12);
        assert!(eta[1].abs() < 1e-6);
        assert!((eta[2] - 1.0).abs() < 1e-4);
        assert!((eta[4] - 3.0).abs() < 1e-4);
        let log_sqrt_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((m.log_norm - log_sqrt_2pi).abs() < 1e-6);
    }

    #[test]
    fn shifted_gaussian_normalizer() {
        // exp(4x - x²/2): N(4, 1), normalizer √(2π) e^8
        let m = quartic_moments([4.0, -0.5, 0.0, -1e-13], DEFAULT_TOL).unwrap();
        let eta = m.raw_moments();
        assert!((eta[1] - 4.0).abs() < 1e-8);
        assert!((eta[2] - 17.0).abs() < 1e-7);
        let want = 8.0 + 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((m.log_norm - want).abs() < 1e-8);
    }

    #[test]
    fn rejects_nonnegative_quartic() {
        assert!(quartic_moments([0.0, -1.0, 0.0, 0.0], DEFAULT_TOL).is_err());
        assert!(quartic_moments([0.0, -1.0, 0.0, 0.5], DEFAULT_TOL).is_err());
        assert!(quartic_moments([f64::NAN, -1.0, 0.0, -1.0], DEFAULT_TOL).is_err());
    }

    #[test]
    fn hull_covers_both_modes() {
        let f = QuarticExponent([0.0, 3.0, 0.0, -1.0]);
        let (_, fmax) = f.argmax();
        let (lo, hi) = superlevel_hull(&f, fmax);
        assert!(lo < -1.5f64.sqrt() && hi > 1.5f64.sqrt());
        assert!((f.value(lo) - (fmax - CUTOFF)).abs() < 1e-6);
        assert!((f.value(hi) - (fmax - CUTOFF)).abs() < 1e-6);
    }

    #[test]
    fn argmax_tie_prefers_smaller() {
        let (x, _) = QuarticExponent([0.0, 3.0, 0.0, -1.0]).argmax();
        assert!((x + 1.5f64.sqrt()).abs() < 1e-12);
    }
}
