use super::{fmt17, rng_for, Path, SimError};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use std::fmt::Write as _;

/// Noisy linear observations `y_i = G x(t_i) + ξ_i`, `ξ_i ~ N(0, V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    pub times: Vec<f64>,
    pub values: Vec<DVector<f64>>,
    pub g: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

impl ObservationSeries {
    pub fn new(times: Vec<f64>, values: Vec<DVector<f64>>, g: DMatrix<f64>, v: DMatrix<f64>) -> Result<Self, SimError> {
        let d = g.nrows();
        if d > g.ncols() {
            return Err(SimError::Dimension(format!(
                "G is {}x{}: more observed components than species",
                d,
                g.ncols()
            )));
        }
        if v.shape() != (d, d) {
            return Err(SimError::Dimension("V must be d x d".into()));
        }
        check_spd(&v)?;
        if times.len() != values.len() {
            return Err(SimError::Dimension("times and values differ in length".into()));
        }
        if values.iter().any(|y| y.len() != d) {
            return Err(SimError::Dimension("observation vector length differs from d".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SimError::Invalid("observation times must increase strictly".into()));
        }
        Ok(Self { times, values, g, v })
    }

    /// Observation dimension `d`.
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with header `t,y1,...,yd`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.dim() {
            let _ = write!(out, ",y{i}");
        }
        out.push('\n');
        for (t, y) in self.times.iter().zip(&self.values) {
            out.push_str(&fmt17(*t));
            for v in y.iter() {
                out.push(',');
                out.push_str(&fmt17(*v));
            }
            out.push('\n');
        }
        out
    }

    /// Reads the CSV written by [`ObservationSeries::to_csv`]; `G` and `V`
    /// are not part of the file and must be supplied.
    pub fn from_csv(text: &str, g: DMatrix<f64>, v: DMatrix<f64>) -> Result<Self, SimError> {
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (idx, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
            let fields = fields.map_err(|e| SimError::Csv {
                line: idx + 1,
                message: e.to_string(),
            })?;
            if fields.len() < 2 {
                return Err(SimError::Csv {
                    line: idx + 1,
                    message: "need a time and at least one value".into(),
                });
            }
            times.push(fields[0]);
            values.push(DVector::from_row_slice(&fields[1..]));
        }
        Self::new(times, values, g, v)
    }
}

fn check_spd(v: &DMatrix<f64>) -> Result<(), SimError> {
    let asym = (v - v.transpose()).abs().max();
    if asym > 1e-12 * v.abs().max().max(f64::MIN_POSITIVE) {
        return Err(SimError::NotSpd);
    }
    v.clone().cholesky().map(|_| ()).ok_or(SimError::NotSpd)
}

/// Equally spaced observation times `t0 + iΔ`, `i = 1..⌊(t_end - t0)/Δ⌋`.
pub fn observation_times(t0: f64, t_end: f64, dt: f64) -> Vec<f64> {
    if !(dt > 0.0) || t_end < t0 {
        return Vec::new();
    }
    let count = ((t_end - t0) / dt + 1e-9).floor() as usize;
    (1..=count).map(|i| t0 + i as f64 * dt).collect()
}

/// Draws observations of `path` at `times`. Noise is `L z` with `L` the
/// Cholesky factor of `V` and `z` standard normal.
pub fn observe(
    path: &Path,
    times: &[f64],
    g: &DMatrix<f64>,
    v: &DMatrix<f64>,
    seed: u64,
) -> Result<ObservationSeries, SimError> {
    if g.ncols() != path.n_species() {
        return Err(SimError::Dimension(format!(
            "G has {} columns, path has {} species",
            g.ncols(),
            path.n_species()
        )));
    }
    check_spd(v)?;
    let chol = v.clone().cholesky().ok_or(SimError::NotSpd)?;
    let l = chol.l();
    let d = g.nrows();
    let mut rng = rng_for(seed);
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        let x = path.sample_at(t)?;
        let xv = DVector::from_iterator(x.len(), x.iter().map(|&c| c as f64));
        let z = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(&mut rng)));
        values.push(g * xv + &l * z);
    }
    ObservationSeries::new(times.to_vec(), values, g.clone(), v.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::library;
    use crate::simkernel::ssa_simulate;

    fn constant_path(x: i64, t_end: f64) -> Path {
        Path::from_parts(1, vec![0.0], vec![x], t_end).unwrap()
    }

    #[test]
    fn noiseless_limit() {
        let net = library::limit_cycle_default();
        let path = ssa_simulate(&net, &[210, 210, 210], 0.0, 2.0, 5).unwrap();
        let times = observation_times(0.0, 2.0, 0.1);
        let g = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let v = DMatrix::from_element(1, 1, 1e-20);
        let obs = observe(&path, &times, &g, &v, 9).unwrap();
        for (t, y) in obs.times.iter().zip(&obs.values) {
            let x = path.sample_at(*t).unwrap();
            assert_eq!(y.len(), 1);
            assert!((y[0] - x[0] as f64).abs() < 1e-8);
        }
    }

    #[test]
    fn noise_variance_matches() {
        let path = constant_path(100, 1e5);
        let times: Vec<f64> = (1..=100_000).map(f64::from).collect();
        let g = DMatrix::from_element(1, 1, 1.0);
        let v = DMatrix::from_element(1, 1, 500.0);
        let obs = observe(&path, &times, &g, &v, 1).unwrap();
        let resid: Vec<f64> = obs.values.iter().map(|y| y[0] - 100.0).collect();
        let mean = resid.iter().sum::<f64>() / resid.len() as f64;
        let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (resid.len() - 1) as f64;
        assert!((var / 500.0 - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn deterministic_per_seed() {
        let path = constant_path(10, 10.0);
        let times = observation_times(0.0, 10.0, 1.0);
        let g = DMatrix::from_element(1, 1, 1.0);
        let v = DMatrix::from_element(1, 1, 3.0);
        let a = observe(&path, &times, &g, &v, 4).unwrap();
        let b = observe(&path, &times, &g, &v, 4).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn rejects_non_spd_noise() {
        let path = constant_path(10, 10.0);
        let g = DMatrix::from_element(1, 1, 1.0);
        let v = DMatrix::from_element(1, 1, -1.0);
        assert!(matches!(observe(&path, &[1.0], &g, &v, 0), Err(SimError::NotSpd)));
    }

    #[test]
    fn grid_of_times() {
        let t = observation_times(0.0, 1.0, 0.1);
        assert_eq!(t.len(), 10);
        assert!((t[9] - 1.0).abs() < 1e-12);
        assert_eq!(observation_times(0.0, 100.0, 1.0).len(), 100);
    }

    #[test]
    fn csv_round_trip() {
        let path = constant_path(10, 10.0);
        let g = DMatrix::from_element(1, 1, 1.0);
        let v = DMatrix::from_element(1, 1, 2.0);
        let obs = observe(&path, &observation_times(0.0, 10.0, 0.5), &g, &v, 3).unwrap();
        let back = ObservationSeries::from_csv(&obs.to_csv(), g, v).unwrap();
        assert_eq!(back, obs);
    }
}
