//! Flat `key = value` experiment configuration.

use super::BenchError;
use crate::filters::{auto_initial_state, FilterKind, DEFAULT_BURN_IN};
use crate::netmodel::{library, parse_network_with_omega, ReactionNetwork};
use nalgebra::DMatrix;
use serde::Serialize;
use std::path::{Path as FsPath, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum NetworkSource {
    /// `bistable`: the single-species benchmark.
    Bistable,
    /// `limit_cycle`: the three-species oscillator.
    LimitCycle,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum X0Policy {
    /// `round(Ω z(50))` of the rate equation from `z = (1, …, 1)`.
    Auto,
    Fixed(Vec<i64>),
}

/// One experiment. The V sweep runs at `sweep_dt`, the Δ sweep at `sweep_v`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub network: NetworkSource,
    pub t_end: f64,
    pub omega: Option<f64>,
    pub x0: X0Policy,
    pub v_grid: Vec<f64>,
    pub dt_grid: Vec<f64>,
    pub sweep_v: f64,
    pub sweep_dt: f64,
    pub reps: usize,
    /// Row-major observation matrix; rows separated by `;` in the file.
    pub g: Vec<Vec<f64>>,
    pub seed: u64,
    pub filters: Vec<FilterKind>,
    pub out_grid: f64,
}

fn parse_list<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<Vec<T>, BenchError> {
    value
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse().map_err(|_| BenchError::Config {
                line,
                message: format!("bad {key} entry `{s}`"),
            })
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<T, BenchError> {
    value.trim().parse().map_err(|_| BenchError::Config {
        line,
        message: format!("bad value for {key}: `{}`", value.trim()),
    })
}

impl ExperimentConfig {
    /// The bistable protocol: Ω=100, T=100, G=1, V ∈ [500, 5000] at Δ=1,
    /// Δ ∈ [0.1, 1] at V=2000, R=20, all three filters.
    pub fn bistable_benchmark() -> Self {
        Self {
            network: NetworkSource::Bistable,
            t_end: 100.0,
            omega: None,
            x0: X0Policy::Auto,
            v_grid: vec![500.0, 1000.0, 2000.0, 3000.0, 4000.0, 5000.0],
            dt_grid: vec![0.1, 0.2, 0.4, 0.6, 0.8, 1.0],
            sweep_v: 2000.0,
            sweep_dt: 1.0,
            reps: 20,
            g: vec![vec![1.0]],
            seed: 1,
            filters: FilterKind::ALL.to_vec(),
            out_grid: 0.01,
        }
    }

    /// The oscillator protocol: T=30, G=(1,0,0), V ∈ [5000, 50000] at
    /// Δ=0.1, Δ ∈ [0.1, 0.5] at V=5000, R=20, GPF and LNA.
    pub fn limit_cycle_benchmark() -> Self {
        Self {
            network: NetworkSource::LimitCycle,
            t_end: 30.0,
            omega: None,
            x0: X0Policy::Auto,
            v_grid: vec![5000.0, 10000.0, 20000.0, 30000.0, 40000.0, 50000.0],
            dt_grid: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            sweep_v: 5000.0,
            sweep_dt: 0.1,
            reps: 20,
            g: vec![vec![1.0, 0.0, 0.0]],
            seed: 1,
            filters: vec![FilterKind::Gpf, FilterKind::Lna],
            out_grid: 0.01,
        }
    }

    pub fn from_file(path: &FsPath) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, path.parent())
    }

    /// Parses the config text; relative network paths resolve against `base_dir`.
    ///
    /// Required: `network`, `T`, `V_grid`, `dt_grid`. Defaults: `x0 = auto`,
    /// `reps = 20`, `G` the first coordinate, `seed = 0`, every filter the
    /// network admits, `out_grid = 0.01`, `sweep_dt` the largest Δ,
    /// `sweep_V` the smallest V.
    pub fn parse(text: &str, base_dir: Option<&FsPath>) -> Result<Self, BenchError> {
        let mut network = None;
        let mut t_end = None;
        let mut omega = None;
        let mut x0 = X0Policy::Auto;
        let mut v_grid = None;
        let mut dt_grid = None;
        let mut sweep_v = None;
        let mut sweep_dt = None;
        let mut reps = 20;
        let mut g = None;
        let mut seed = 0;
        let mut filters = None;
        let mut out_grid = 0.01;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| BenchError::Config {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "network" => {
                    network = Some(match value {
                        "bistable" => NetworkSource::Bistable,
                        "limit_cycle" | "limitcycle" => NetworkSource::LimitCycle,
                        file => {
                            let p = PathBuf::from(file);
                            NetworkSource::File(match base_dir {
                                Some(dir) if p.is_relative() => dir.join(p),
                                _ => p,
                            })
                        }
                    })
                }
                "T" => t_end = Some(parse_one(value, line, key)?),
                "omega" => omega = Some(parse_one(value, line, key)?),
                "x0" => {
                    x0 = if value == "auto" {
                        X0Policy::Auto
                    } else {
                        X0Policy::Fixed(parse_list(value, line, key)?)
                    }
                }
                "V_grid" => v_grid = Some(parse_list(value, line, key)?),
                "dt_grid" => dt_grid = Some(parse_list(value, line, key)?),
                "sweep_V" => sweep_v = Some(parse_one(value, line, key)?),
                "sweep_dt" => sweep_dt = Some(parse_one(value, line, key)?),
                "reps" => reps = parse_one(value, line, key)?,
                "G" => {
                    g = Some(
                        value
                            .split(';')
                            .map(|row| parse_list(row, line, key))
                            .collect::<Result<Vec<Vec<f64>>, _>>()?,
                    )
                }
                "seed" => seed = parse_one(value, line, key)?,
                "filters" => {
                    filters = Some(
                        value
                            .split(',')
                            .map(|s| {
                                s.parse::<FilterKind>().map_err(|e| BenchError::Config {
                                    line,
                                    message: e.to_string(),
                                })
                            })
                            .collect::<Result<Vec<_>, _>>()?,
                    )
                }
                "out_grid" => out_grid = parse_one(value, line, key)?,
                other => {
                    return Err(BenchError::Config {
                        line,
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
        }

        let missing = |key: &str| BenchError::Config {
            line: 0,
            message: format!("missing required key `{key}`"),
        };
        let network = network.ok_or_else(|| missing("network"))?;
        let t_end = t_end.ok_or_else(|| missing("T"))?;
        let v_grid: Vec<f64> = v_grid.ok_or_else(|| missing("V_grid"))?;
        let dt_grid: Vec<f64> = dt_grid.ok_or_else(|| missing("dt_grid"))?;
        let mut cfg = Self {
            network,
            t_end,
            omega,
            x0,
            sweep_v: sweep_v.unwrap_or_else(|| v_grid.iter().cloned().fold(f64::INFINITY, f64::min)),
            sweep_dt: sweep_dt.unwrap_or_else(|| dt_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
            v_grid,
            dt_grid,
            reps,
            g: Vec::new(),
            seed,
            filters: Vec::new(),
            out_grid,
        };
        let net = cfg.load_network()?;
        let n = net.n_species();
        cfg.g = g.unwrap_or_else(|| vec![(0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect()]);
        cfg.filters = filters.unwrap_or_else(|| {
            if n == 1 {
                FilterKind::ALL.to_vec()
            } else {
                vec![FilterKind::Gpf, FilterKind::Lna]
            }
        });
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Invalid(m));
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.v_grid.is_empty() || self.dt_grid.is_empty() {
            return bad("V_grid and dt_grid must be nonempty".into());
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("T = {} must be positive", self.t_end));
        }
        for &v in self.v_grid.iter().chain([&self.sweep_v]) {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("V = {v} must be positive"));
            }
        }
        for &dt in self.dt_grid.iter().chain([&self.sweep_dt]) {
            if !(dt > 0.0 && dt < self.t_end) {
                return bad(format!("Δ = {dt} must lie in (0, T)"));
            }
        }
        if !(self.out_grid > 0.0 && self.out_grid < self.t_end) {
            return bad(format!("out_grid = {} must lie in (0, T)", self.out_grid));
        }
        if self.filters.is_empty() {
            return bad("no filters requested".into());
        }
        let cols = self.g.first().map_or(0, |r| r.len());
        if cols == 0 || self.g.iter().any(|r| r.len() != cols) {
            return bad("G rows must be nonempty and of equal length".into());
        }
        Ok(())
    }

    pub fn load_network(&self) -> Result<ReactionNetwork, BenchError> {
        let net = match &self.network {
            NetworkSource::Bistable => library::bistable(self.omega.unwrap_or(100.0), [22.5, 37.5, 18.0, 2.5]),
            NetworkSource::LimitCycle => library::limit_cycle(self.omega.unwrap_or(100.0), [3.1, 1.0, 1.0, 1.0, 1.0]),
            NetworkSource::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                parse_network_with_omega(&text, self.omega)?
            }
        };
        Ok(net)
    }

    pub fn g_matrix(&self) -> DMatrix<f64> {
        let cols = self.g.first().map_or(0, |r| r.len());
        DMatrix::from_fn(self.g.len(), cols, |r, c| self.g[r][c])
    }

    pub fn initial_state(&self, net: &ReactionNetwork) -> Result<Vec<i64>, BenchError> {
        match &self.x0 {
            X0Policy::Fixed(x) => Ok(x.clone()),
            X0Policy::Auto => auto_initial_state(net, DEFAULT_BURN_IN)
                .map_err(|e| BenchError::Invalid(format!("rate-equation burn-in failed: {e}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = "# bistable\nnetwork = bistable\nT = 50\nomega = 100\nx0 = 106\n\
                    V_grid = 500, 1000\ndt_grid = 0.5, 1\nsweep_V = 1000\nreps = 3\nG = 1\nseed = 9\n\
                    filters = gpf, lna\nout_grid = 0.05\n";
        let cfg = ExperimentConfig::parse(text, None).unwrap();
        assert_eq!(cfg.network, NetworkSource::Bistable);
        assert_eq!(cfg.t_end, 50.0);
        assert_eq!(cfg.x0, X0Policy::Fixed(vec![106]));
        assert_eq!(cfg.v_grid, vec![500.0, 1000.0]);
        assert_eq!(cfg.sweep_v, 1000.0);
        assert_eq!(cfg.sweep_dt, 1.0);
        assert_eq!(cfg.reps, 3);
        assert_eq!(cfg.filters, vec![FilterKind::Gpf, FilterKind::Lna]);
        assert_eq!(cfg.g_matrix(), DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn defaults_follow_the_network() {
        let cfg =
            ExperimentConfig::parse("network = limit_cycle\nT = 30\nV_grid = 5000\ndt_grid = 0.1, 0.5", None).unwrap();
        assert_eq!(cfg.reps, 20);
        assert_eq!(cfg.filters, vec![FilterKind::Gpf, FilterKind::Lna]);
        assert_eq!(cfg.g, vec![vec![1.0, 0.0, 0.0]]);
        assert_eq!(cfg.out_grid, 0.01);
        assert_eq!(cfg.sweep_dt, 0.5);
    }

    #[test]
    fn rejects_bad_input() {
        let base = "network = bistable\nT = 10\nV_grid = 500\n";
        assert!(matches!(
            ExperimentConfig::parse(base, None),
            Err(BenchError::Config { .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse(&format!("{base}dt_grid = 20"), None),
            Err(BenchError::Invalid(_))
        ));
        assert!(matches!(
            ExperimentConfig::parse(&format!("{base}dt_grid = 1\nreps = 0"), None),
            Err(BenchError::Invalid(_))
        ));
        assert!(matches!(
            ExperimentConfig::parse(&format!("{base}dt_grid = 1\ncolour = red"), None),
            Err(BenchError::Config { line: 5, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse(&format!("{base}dt_grid = 1\nfilters = ekf"), None),
            Err(BenchError::Config { .. })
        ));
    }

    #[test]
    fn relative_network_paths_resolve_against_the_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("id.net"),
            "species: X\nreaction b: 0 -> X @ 10\nreaction d: X -> 0 @ 1\n",
        )
        .unwrap();
        let cfg_path = dir.path().join("run.cfg");
        std::fs::write(&cfg_path, "network = id.net\nT = 5\nV_grid = 4\ndt_grid = 1").unwrap();
        let cfg = ExperimentConfig::from_file(&cfg_path).unwrap();
        assert_eq!(cfg.network, NetworkSource::File(dir.path().join("id.net")));
        assert_eq!(cfg.load_network().unwrap().n_species(), 1);
    }

    #[test]
    fn presets_validate() {
        ExperimentConfig::bistable_benchmark().validate().unwrap();
        ExperimentConfig::limit_cycle_benchmark().validate().unwrap();
    }
}
