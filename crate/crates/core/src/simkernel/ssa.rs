use super::{fmt17, rng_for, SimError};
use crate::netmodel::ReactionNetwork;
use rand::Rng;
use std::fmt::Write as _;

/// A piecewise-constant jump trajectory.
///
/// `times[0] = t0` and `times[k]` is the k-th jump; state `k` is active on
/// `[times[k], times[k+1])`, the last one until `t_end`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    n_species: usize,
    times: Vec<f64>,
    states: Vec<i64>,
    t_end: f64,
}

impl Path {
    /// Builds a path from explicit jump data; used by tests and CSV import.
    pub fn from_parts(n_species: usize, times: Vec<f64>, states: Vec<i64>, t_end: f64) -> Result<Self, SimError> {
        if times.is_empty() || states.len() != times.len() * n_species {
            return Err(SimError::Dimension("path times/states length mismatch".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SimError::Invalid("path times must increase strictly".into()));
        }
        if *times.last().unwrap() > t_end {
            return Err(SimError::Invalid("jump after t_end".into()));
        }
        Ok(Self {
            n_species,
            times,
            states,
            t_end,
        })
    }

    pub fn n_species(&self) -> usize {
        self.n_species
    }

    pub fn n_jumps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// `t0` followed by every jump time.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, k: usize) -> &[i64] {
        &self.states[k * self.n_species..(k + 1) * self.n_species]
    }

    pub fn final_state(&self) -> &[i64] {
        self.state(self.times.len() - 1)
    }

    /// State at time `t` (left value of the piecewise-constant path).
    pub fn sample_at(&self, t: f64) -> Result<&[i64], SimError> {
        if !(t >= self.t0() && t <= self.t_end) {
            return Err(SimError::OutOfRange {
                t,
                t0: self.t0(),
                t_end: self.t_end,
            });
        }
        Ok(self.state(self.segment_index(t)))
    }

    /// Index of the state active at `t` (clamped into range).
    pub(crate) fn segment_index(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// CSV with header `t,x1,...,xn`: initial row, one row per jump, final row at `t_end`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.n_species {
            let _ = write!(out, ",x{i}");
        }
        out.push('\n');
        let mut row = |t: f64, x: &[i64]| {
            out.push_str(&fmt17(t));
            for v in x {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        };
        for k in 0..self.times.len() {
            row(self.times[k], self.state(k));
        }
        row(self.t_end, self.final_state());
        out
    }

    /// Inverse of [`Path::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self, SimError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(SimError::Csv {
            line: 1,
            message: "empty file".into(),
        })?;
        let n = header.split(',').count().saturating_sub(1);
        if n == 0 {
            return Err(SimError::Csv {
                line: 1,
                message: "header needs t and at least one species".into(),
            });
        }
        let mut rows: Vec<(f64, Vec<i64>)> = Vec::new();
        for (idx, line) in lines {
            let csv_err = |message: &str| SimError::Csv {
                line: idx + 1,
                message: message.into(),
            };
            let mut fields = line.split(',');
            let t: f64 = fields
                .next()
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(|| csv_err("bad time"))?;
            let x: Vec<i64> = fields
                .map(|f| f.trim().parse().map_err(|_| csv_err("bad count")))
                .collect::<Result<_, _>>()?;
            if x.len() != n {
                return Err(csv_err("wrong number of columns"));
            }
            rows.push((t, x));
        }
        if rows.len() < 2 {
            return Err(SimError::Csv {
                line: 2,
                message: "need initial and final rows".into(),
            });
        }
        let (t_end, _) = rows.pop().unwrap();
        let times = rows.iter().map(|r| r.0).collect();
        let states = rows.into_iter().flat_map(|r| r.1).collect();
        Self::from_parts(n, times, states, t_end)
    }
}

/// Gillespie direct-method sample of the jump process on `[t0, t_end]`.
///
/// Waiting times are drawn by inverse CDF, the firing reaction by a
/// cumulative-sum scan. Identical inputs give bit-identical paths.
pub fn ssa_simulate(net: &ReactionNetwork, x0: &[i64], t0: f64, t_end: f64, seed: u64) -> Result<Path, SimError> {
    let n = net.n_species();
    if x0.len() != n {
        return Err(SimError::Dimension(format!(
            "x0 has {} entries, network has {n} species",
            x0.len()
        )));
    }
    // rejects negative components
    net.propensity(x0)?;
    if !(t_end >= t0) {
        return Err(SimError::Invalid(format!("t_end = {t_end} precedes t0 = {t0}")));
    }

    let m = net.n_reactions();
    let a = &net.net_effect_matrix().0;
    let deltas: Vec<Vec<i64>> = (0..m).map(|j| (0..n).map(|i| a[(i, j)]).collect()).collect();
    let mut rng = rng_for(seed);
    let mut h = vec![0.0; m];
    let mut x = x0.to_vec();
    let mut times = vec![t0];
    let mut states = x0.to_vec();
    let mut t = t0;

    loop {
        net.propensity_into(&x, &mut h);
        let total: f64 = h.iter().sum();
        if total <= 0.0 {
            break;
        }
        let u: f64 = rng.gen();
        t += -(1.0 - u).ln() / total;
        if t > t_end {
            break;
        }
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = m - 1;
        for (j, &hj) in h.iter().enumerate() {
            acc += hj;
            if target < acc {
                chosen = j;
                break;
            }
        }
        // rounding can leave the scan on a zero-propensity tail entry
        while h[chosen] == 0.0 {
            chosen -= 1;
        }
        for (xi, d) in x.iter_mut().zip(&deltas[chosen]) {
            *xi += d;
        }
        if t <= *times.last().unwrap() {
            // two events closer than float resolution; merge into one timestamp
            let len = states.len();
            states[len - n..].copy_from_slice(&x);
        } else {
            times.push(t);
            states.extend_from_slice(&x);
        }
    }

    Ok(Path {
        n_species: n,
        times,
        states,
        t_end,
    })
}
