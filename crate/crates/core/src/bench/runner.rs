//! Paired repetitions over the (V, Δ) grid and their aggregation.

use super::{derive_seed, mse, BenchError, ExperimentConfig};
use crate::filters::{run_filter, FilterError, FilterInit, FilterKind, FilterSettings};
use crate::netmodel::ReactionNetwork;
use crate::simkernel::{fmt17, observation_times, observe, ssa_simulate, Path};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path as FsPath;

/// Which axis a grid cell belongs to; the crossing cell belongs to both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sweep {
    V,
    Dt,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub rep: usize,
    pub path_seed: u64,
    pub obs_seed: u64,
    /// `None` when the filter failed.
    pub mse: Option<f64>,
    pub diverged: bool,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub filter: FilterKind,
    #[serde(rename = "V")]
    pub v: f64,
    pub dt: f64,
    pub sweep: Sweep,
    pub runs: Vec<RunRecord>,
    /// Mean over the runs that finished.
    pub mean_mse: Option<f64>,
    /// Sample standard deviation over √n; needs two finished runs.
    pub stderr: Option<f64>,
    pub n_diverged: usize,
}

impl CellReport {
    fn aggregate(filter: FilterKind, v: f64, dt: f64, sweep: Sweep, runs: Vec<RunRecord>) -> Self {
        let ok: Vec<f64> = runs.iter().filter_map(|r| r.mse).collect();
        let n = ok.len() as f64;
        let mean_mse = (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / n);
        let stderr = mean_mse.filter(|_| ok.len() > 1).map(|m| {
            let var = ok.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        });
        let n_diverged = runs.iter().filter(|r| r.diverged).count();
        Self {
            filter,
            v,
            dt,
            sweep,
            runs,
            mean_mse,
            stderr,
            n_diverged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub x0: Vec<i64>,
    pub cells: Vec<CellReport>,
}

impl ExperimentReport {
    pub fn cell(&self, filter: FilterKind, v: f64, dt: f64) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.filter == filter && c.v == v && c.dt == dt)
    }

    fn sweep_csv(&self, axis: Sweep) -> String {
        let mut out = String::from(if axis == Sweep::V {
            "V,filter,mean_mse,stderr,n_diverged\n"
        } else {
            "dt,filter,mean_mse,stderr,n_diverged\n"
        });
        let opt = |x: Option<f64>| fmt17(x.unwrap_or(f64::NAN));
        for c in self.cells.iter().filter(|c| c.sweep == axis || c.sweep == Sweep::Both) {
            let x = if axis == Sweep::V { c.v } else { c.dt };
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt17(x),
                c.filter,
                opt(c.mean_mse),
                opt(c.stderr),
                c.n_diverged
            );
        }
        out
    }

    /// Mean MSE against V at the V-sweep Δ.
    pub fn mse_vs_v_csv(&self) -> String {
        self.sweep_csv(Sweep::V)
    }

    /// Mean MSE against Δ at the Δ-sweep V.
    pub fn mse_vs_dt_csv(&self) -> String {
        self.sweep_csv(Sweep::Dt)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes `report.json`, `mse_vs_V.csv` and `mse_vs_dt.csv` into `dir`.
    pub fn write_to_dir(&self, dir: &FsPath) -> Result<(), BenchError> {
        let io = |source| BenchError::Io {
            path: dir.display().to_string(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(io)?;
        std::fs::write(dir.join("report.json"), self.to_json()).map_err(io)?;
        std::fs::write(dir.join("mse_vs_V.csv"), self.mse_vs_v_csv()).map_err(io)?;
        std::fs::write(dir.join("mse_vs_dt.csv"), self.mse_vs_dt_csv()).map_err(io)?;
        Ok(())
    }
}

/// Grid cells in report order: the V sweep, then the Δ sweep without the
/// crossing cell.
fn cells(cfg: &ExperimentConfig) -> Vec<(f64, f64, Sweep)> {
    let mut out: Vec<(f64, f64, Sweep)> = cfg
        .v_grid
        .iter()
        .map(|&v| (v, cfg.sweep_dt, if v == cfg.sweep_v { Sweep::Both } else { Sweep::V }))
        .collect();
    for &dt in &cfg.dt_grid {
        if let Some(c) = out.iter_mut().find(|c| c.0 == cfg.sweep_v && c.1 == dt) {
            c.2 = Sweep::Both;
        } else {
            out.push((cfg.sweep_v, dt, Sweep::Dt));
        }
    }
    out
}

struct Job {
    rep: usize,
    cell: usize,
    obs_seed: u64,
}

fn run_job(
    net: &ReactionNetwork,
    cfg: &ExperimentConfig,
    g: &DMatrix<f64>,
    path: &Path,
    (v, dt): (f64, f64),
    obs_seed: u64,
) -> Result<Vec<Result<f64, String>>, BenchError> {
    let d = g.nrows();
    let v_mat = DMatrix::from_diagonal_element(d, d, v);
    let obs = observe(path, &observation_times(0.0, cfg.t_end, dt), g, &v_mat, obs_seed)?;
    let settings = FilterSettings {
        out_dt: cfg.out_grid,
        t_end: Some(cfg.t_end),
        ..FilterSettings::default()
    };
    Ok(cfg
        .filters
        .iter()
        .map(|&kind| {
            let trail =
                FilterInit::default_for(net, kind, &obs).and_then(|init| run_filter(net, kind, &obs, &init, &settings));
            match trail {
                Ok(trail) => mse(path, &trail).map_err(|e| e.to_string()),
                Err(e) => Err(e.to_string()),
            }
        })
        .collect())
}

/// Runs the configured grid. Each repetition draws one path; every cell
/// observes it with its own seed, and all filters of a cell consume the
/// same observations. Filter failures are recorded per run and left out of
/// the means.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, BenchError> {
    cfg.validate()?;
    let net = cfg.load_network()?;
    let n = net.n_species();
    if n > 1 && cfg.filters.contains(&FilterKind::Qpf) {
        return Err(FilterError::NotUnivariate(n).into());
    }
    let g = cfg.g_matrix();
    if g.ncols() != n {
        return Err(BenchError::Invalid(format!(
            "G has {} columns, network has {n} species",
            g.ncols()
        )));
    }
    let x0 = cfg.initial_state(&net)?;
    if x0.len() != n {
        return Err(BenchError::Invalid(format!(
            "x0 has {} entries, network has {n} species",
            x0.len()
        )));
    }
    let grid = cells(cfg);

    let path_seeds: Vec<u64> = (0..cfg.reps).map(|r| derive_seed(cfg.seed, &[r as u64])).collect();
    let paths = path_seeds
        .par_iter()
        .map(|&s| ssa_simulate(&net, &x0, 0.0, cfg.t_end, s))
        .collect::<Result<Vec<_>, _>>()?;

    let jobs: Vec<Job> = (0..cfg.reps)
        .flat_map(|rep| {
            (0..grid.len()).map(move |cell| Job {
                rep,
                cell,
                obs_seed: derive_seed(cfg.seed, &[rep as u64, cell as u64 + 1]),
            })
        })
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|j| {
            let (v, dt, _) = grid[j.cell];
            run_job(&net, cfg, &g, &paths[j.rep], (v, dt), j.obs_seed)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = Vec::with_capacity(grid.len() * cfg.filters.len());
    for (c, &(v, dt, sweep)) in grid.iter().enumerate() {
        for (f, &kind) in cfg.filters.iter().enumerate() {
            let runs = jobs
                .iter()
                .zip(&outcomes)
                .filter(|(j, _)| j.cell == c)
                .map(|(j, o)| {
                    let (mse, message) = match &o[f] {
                        Ok(m) => (Some(*m), None),
                        Err(e) => (None, Some(e.clone())),
                    };
                    RunRecord {
                        rep: j.rep,
                        path_seed: path_seeds[j.rep],
                        obs_seed: j.obs_seed,
                        diverged: mse.is_none(),
                        mse,
                        message,
                    }
                })
                .collect();
            out.push(CellReport::aggregate(kind, v, dt, sweep, runs));
        }
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        x0,
        cells: out,
    })
}

/// The single-species benchmark; all three filters are admissible.
pub fn run_bistable_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, BenchError> {
    let n = cfg.load_network()?.n_species();
    if n != 1 {
        return Err(BenchError::Invalid(format!(
            "bistable experiment needs one species, network has {n}"
        )));
    }
    run_experiment(cfg)
}

/// The three-species oscillator; QPF is rejected as univariate only.
pub fn run_limitcycle_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, BenchError> {
    let n = cfg.load_network()?.n_species();
    if cfg.filters.contains(&FilterKind::Qpf) {
        return Err(FilterError::NotUnivariate(n).into());
    }
    if n != 3 {
        return Err(BenchError::Invalid(format!(
            "limit-cycle experiment needs three species, network has {n}"
        )));
    }
    run_experiment(cfg)
}
