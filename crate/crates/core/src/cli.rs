//! Command-line front end. Exit codes: 0 success, 1 usage error, 2
//! numerical failure.

use crate::bench::{self, BenchError, ExperimentConfig, NetworkSource};
use crate::closures::{gamma_closure_drift, gamma_projection_drift, BimolecularTemplate, ClosureError, GammaState};
use crate::filters::{
    auto_initial_state, run_filter, FilterError, FilterInit, FilterKind, FilterSettings, DEFAULT_BURN_IN,
};
use crate::netmodel::{library, parse_network_with_omega, NetError, ReactionNetwork};
use crate::odecore::{integrate, OdeError, RhsError, StepControl};
use crate::simkernel::{
    fmt17, master_evolve, observation_times, observe, ssa_simulate, MasterOptions, ObservationSeries, Path, SimError,
    TruncatedDistribution,
};
use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "rnfilter",
    version,
    about = "Simulate and filter stochastic reaction networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample an exact path and write it as CSV.
    Simulate(SimulateArgs),
    /// Observe a path with Gaussian noise at a fixed interval.
    Observe(ObserveArgs),
    /// Run one filter over an observation file.
    Filter(FilterArgs),
    /// Run an MSE experiment from a config file.
    Experiment(ExperimentArgs),
    /// Integrate the truncated master equation.
    Oracle(OracleArgs),
    /// Compare gamma projection and gamma moment closure trajectories.
    ClosureCompare(ClosureArgs),
}

#[derive(Debug, Args)]
pub struct NetworkArgs {
    /// Network file, or `bistable` / `limit_cycle` for the built-in models.
    #[arg(long)]
    pub network: String,
    /// System size Ω, overriding the file's `omega:` line.
    #[arg(long)]
    pub omega: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub net: NetworkArgs,
    /// Initial counts as `a,b,...`, or `auto` for the rate-equation burn-in.
    #[arg(long, default_value = "auto")]
    pub x0: String,
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    #[arg(long)]
    pub t_end: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ObserveArgs {
    /// Path CSV written by `simulate`.
    #[arg(long)]
    pub path: PathBuf,
    /// Observation interval Δ.
    #[arg(long)]
    pub dt: f64,
    /// Noise variance, the same on every observed coordinate.
    #[arg(long)]
    pub v: f64,
    /// Observation matrix, rows separated by `;`; the first species when absent.
    #[arg(long)]
    pub g: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// gpf, qpf or lna.
    #[arg(long)]
    pub kind: String,
    #[command(flatten)]
    pub net: NetworkArgs,
    /// Observation CSV written by `observe`.
    #[arg(long)]
    pub obs: PathBuf,
    #[arg(long)]
    pub v: f64,
    #[arg(long)]
    pub g: Option<String>,
    /// End of the output grid; the last observation time when absent.
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub out_dt: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Directory receiving report.json, mse_vs_V.csv and mse_vs_dt.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub net: NetworkArgs,
    /// Initial counts `a,b,...`; the distribution starts as a point mass.
    #[arg(long)]
    pub x0: String,
    /// Largest count per species, `a,b,...` (one value applies to all).
    #[arg(long = "box")]
    pub box_max: String,
    #[arg(long)]
    pub t_end: f64,
    /// Largest probability allowed to leak out of the box.
    #[arg(long, default_value_t = 1e-6)]
    pub mass_cap: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClosureArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a1: i64,
    #[arg(long, allow_hyphen_values = true)]
    pub a2: i64,
    #[arg(long)]
    pub k1: f64,
    #[arg(long)]
    pub k2: f64,
    /// Initial mean.
    #[arg(long)]
    pub mu: f64,
    /// Initial variance.
    #[arg(long)]
    pub var: f64,
    #[arg(long)]
    pub t_end: f64,
    /// Output spacing.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure of a subcommand, split by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<NetError> for CliError {
    fn from(e: NetError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Ode(_) | SimError::BoxTooSmall { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<FilterError> for CliError {
    fn from(e: FilterError) -> Self {
        match e {
            FilterError::NotUnivariate(_) | FilterError::Dimension(_) | FilterError::Invalid(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Filter(f) => f.into(),
            BenchError::Sim(s) => s.into(),
            BenchError::SpanMismatch(..) => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ClosureError> for CliError {
    fn from(e: ClosureError) -> Self {
        match e {
            ClosureError::Pole(_) | ClosureError::Gauss(_) => CliError::Numerical(e.to_string()),
            ClosureError::Domain(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<OdeError> for CliError {
    fn from(e: OdeError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

fn read(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display()))),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Usage(format!("stdout: {e}"))),
            _ => Ok(()),
        },
    }
}

fn load_network(args: &NetworkArgs) -> Result<ReactionNetwork, CliError> {
    match args.network.as_str() {
        "bistable" => Ok(library::bistable(args.omega.unwrap_or(100.0), [22.5, 37.5, 18.0, 2.5])),
        "limit_cycle" | "limitcycle" => Ok(library::limit_cycle(
            args.omega.unwrap_or(100.0),
            [3.1, 1.0, 1.0, 1.0, 1.0],
        )),
        file => Ok(parse_network_with_omega(&read(file.as_ref())?, args.omega)?),
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad {what} entry `{}`", s.trim())))
        })
        .collect()
}

fn parse_g(text: Option<&str>, n: usize) -> Result<DMatrix<f64>, CliError> {
    let Some(text) = text else {
        return Ok(DMatrix::from_fn(1, n, |_, c| if c == 0 { 1.0 } else { 0.0 }));
    };
    let rows = text
        .split(';')
        .map(|r| parse_list::<f64>(r, "G"))
        .collect::<Result<Vec<_>, _>>()?;
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) || cols != n {
        return Err(CliError::Usage(format!("G must have {n} columns in every row")));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

fn noise(v: f64, d: usize) -> Result<DMatrix<f64>, CliError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(CliError::Usage(format!("noise variance {v} must be positive")));
    }
    Ok(DMatrix::from_diagonal_element(d, d, v))
}

fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let net = load_network(&args.net)?;
    let x0 = if args.x0 == "auto" {
        auto_initial_state(&net, DEFAULT_BURN_IN)?
    } else {
        parse_list(&args.x0, "x0")?
    };
    let path = ssa_simulate(&net, &x0, args.t0, args.t_end, args.seed)?;
    emit(&args.out, &path.to_csv())
}

fn observe_cmd(args: &ObserveArgs) -> Result<(), CliError> {
    let path = Path::from_csv(&read(&args.path)?)?;
    let g = parse_g(args.g.as_deref(), path.n_species())?;
    let v = noise(args.v, g.nrows())?;
    let times = observation_times(path.t0(), path.t_end(), args.dt);
    let obs = observe(&path, &times, &g, &v, args.seed)?;
    emit(&args.out, &obs.to_csv())
}

fn filter_cmd(args: &FilterArgs) -> Result<(), CliError> {
    let kind: FilterKind = args
        .kind
        .parse()
        .map_err(|e: FilterError| CliError::Usage(e.to_string()))?;
    let net = load_network(&args.net)?;
    if kind == FilterKind::Qpf && net.n_species() != 1 {
        return Err(FilterError::NotUnivariate(net.n_species()).into());
    }
    let g = parse_g(args.g.as_deref(), net.n_species())?;
    let v = noise(args.v, g.nrows())?;
    let obs = ObservationSeries::from_csv(&read(&args.obs)?, g, v)?;
    let init = FilterInit::default_for(&net, kind, &obs)?;
    let settings = FilterSettings {
        out_dt: args.out_dt,
        t_end: args.t_end,
        ..FilterSettings::default()
    };
    let trail = run_filter(&net, kind, &obs, &init, &settings)?;
    emit(&args.out, &trail.to_csv())
}

fn experiment(args: &ExperimentArgs) -> Result<(), CliError> {
    let cfg = ExperimentConfig::from_file(&args.config)?;
    let report = match cfg.network {
        NetworkSource::Bistable => bench::run_bistable_experiment(&cfg)?,
        NetworkSource::LimitCycle => bench::run_limitcycle_experiment(&cfg)?,
        NetworkSource::File(_) => bench::run_experiment(&cfg)?,
    };
    report.write_to_dir(&args.out)?;
    Ok(())
}

fn oracle(args: &OracleArgs) -> Result<(), CliError> {
    let net = load_network(&args.net)?;
    let n = net.n_species();
    let x0: Vec<usize> = parse_list(&args.x0, "x0")?;
    let mut box_max: Vec<usize> = parse_list(&args.box_max, "box")?;
    if box_max.len() == 1 {
        box_max = vec![box_max[0]; n];
    }
    let p0 = TruncatedDistribution::point_mass(box_max, &x0)?;
    let opts = MasterOptions {
        mass_cap: args.mass_cap,
        ..MasterOptions::default()
    };
    let p = master_evolve(&net, &p0, 0.0, args.t_end, &opts)?;
    emit(&args.out, &p.to_csv())
}

fn closure_compare(args: &ClosureArgs) -> Result<(), CliError> {
    let tpl = BimolecularTemplate::new(args.a1, args.a2, args.k1, args.k2)?;
    let start = GammaState::from_mean_variance(args.mu, args.var)?;
    if !(args.t_end > 0.0 && args.dt > 0.0) {
        return Err(CliError::Usage("t-end and dt must be positive".into()));
    }
    let steps = (args.t_end / args.dt).round().max(1.0) as usize;
    let grid: Vec<f64> = (0..=steps).map(|k| (k as f64 * args.dt).min(args.t_end)).collect();
    let ctrl = StepControl::with_tolerance(1e-10);
    let wrap = |e: ClosureError| RhsError(e.to_string());
    let (_, projection) = integrate(
        |_, y: &[f64], dy: &mut [f64]| {
            let (dmu, dkappa) = gamma_projection_drift(&tpl, y[0], y[1]).map_err(wrap)?;
            dy[0] = dmu;
            dy[1] = dkappa;
            Ok(())
        },
        &[start.mu, start.kappa],
        0.0,
        args.t_end,
        &ctrl,
        &grid,
    )?;
    let (_, closure) = integrate(
        |_, y: &[f64], dy: &mut [f64]| {
            let (dmu, dvar) = gamma_closure_drift(&tpl, y[0], y[1]).map_err(wrap)?;
            dy[0] = dmu;
            dy[1] = dvar;
            Ok(())
        },
        &[args.mu, args.var],
        0.0,
        args.t_end,
        &ctrl,
        &grid,
    )?;
    let mut out = String::from("t,mu_projection,var_projection,mu_closure,var_closure\n");
    for ((t, p), c) in projection.times.iter().zip(&projection.states).zip(&closure.states) {
        let var_p = p[0] * p[0] / p[1];
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt17(*t),
            fmt17(p[0]),
            fmt17(var_p),
            fmt17(c[0]),
            fmt17(c[1])
        );
    }
    emit(&args.out, &out)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Observe(a) => observe_cmd(a),
        Command::Filter(a) => filter_cmd(a),
        Command::Experiment(a) => experiment(a),
        Command::Oracle(a) => oracle(a),
        Command::ClosureCompare(a) => closure_compare(a),
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit code; diagnostics go to stderr.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes() {
        assert_eq!(CliError::from(FilterError::NotUnivariate(3)).exit_code(), EXIT_USAGE);
        let diverged = FilterError::Diverged {
            t: 1.0,
            reason: "step size underflow".into(),
        };
        assert_eq!(CliError::from(diverged).exit_code(), EXIT_NUMERICAL);
        assert_eq!(
            CliError::from(ClosureError::Pole("κ = 1".into())).exit_code(),
            EXIT_NUMERICAL
        );
        assert_eq!(
            CliError::from(SimError::BoxTooSmall {
                mass_lost: 1.0,
                cap: 0.0
            })
            .exit_code(),
            EXIT_NUMERICAL
        );
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(dispatch(["rnfilter", "frobnicate"]), EXIT_USAGE);
        assert_eq!(dispatch(["rnfilter", "simulate", "--t-end", "1"]), EXIT_USAGE);
        assert_eq!(dispatch(["rnfilter", "--help"]), EXIT_OK);
    }

    #[test]
    fn g_parsing() {
        assert_eq!(
            parse_g(None, 3).unwrap(),
            DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0])
        );
        assert_eq!(
            parse_g(Some("1,0;0,2"), 2).unwrap(),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0])
        );
        assert!(parse_g(Some("1,0"), 3).is_err());
    }
}
