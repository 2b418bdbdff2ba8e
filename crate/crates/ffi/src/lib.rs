//! C ABI over `rnfilter`.
//!
//! Objects cross the boundary as opaque handles written through an
//! out-pointer and released with the matching `rn_*_free`. Every fallible
//! call returns an [`RnStatus`]; on failure a description is kept per thread
//! and read back with [`rn_last_error_message`].

#![allow(clippy::missing_safety_doc)]

use nalgebra::DMatrix;
use rnfilter::bench;
use rnfilter::filters::{run_filter, FilterError, FilterInit, FilterKind, FilterSettings};
use rnfilter::netmodel::{library, parse_network};
use rnfilter::simkernel::{observation_times, observe, ssa_simulate, ObservationSeries, Path, SimError};
use rnfilter::ReactionNetwork;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Numerical = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RnFilterKind {
    Gpf = 0,
    Qpf = 1,
    Lna = 2,
}

impl From<RnFilterKind> for FilterKind {
    fn from(k: RnFilterKind) -> Self {
        match k {
            RnFilterKind::Gpf => FilterKind::Gpf,
            RnFilterKind::Qpf => FilterKind::Qpf,
            RnFilterKind::Lna => FilterKind::Lna,
        }
    }
}

/// A parsed reaction network.
pub struct RnNetwork(ReactionNetwork);
/// A sampled jump path.
pub struct RnPath(Path);
/// Noisy observations of a path.
pub struct RnObservations(ObservationSeries);
/// A filter's MAP trail on its output grid.
pub struct RnTrajectory {
    times: Vec<f64>,
    map: Vec<f64>,
    dim: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let text = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(RnStatus, String);

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let status = match e {
            SimError::Ode(_) | SimError::BoxTooSmall { .. } => RnStatus::Numerical,
            SimError::Csv { .. } | SimError::Net(_) => RnStatus::Parse,
            _ => RnStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<FilterError> for Failure {
    fn from(e: FilterError) -> Self {
        let status = match e {
            FilterError::NotUnivariate(_) | FilterError::Dimension(_) | FilterError::Invalid(_) => {
                RnStatus::InvalidArgument
            }
            _ => RnStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(RnStatus::InvalidArgument, message.into())
}

/// Runs `body`, turning errors and panics into a status plus last-error text.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> RnStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => RnStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RnStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(RnStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(RnStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(RnStatus::NullPointer, "output handle is null".into()));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(RnStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(RnStatus::Parse, format!("{what} is not UTF-8")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Description of the last failure on this thread, or NULL. The pointer
/// stays valid until the next `rn_*` call on the same thread.
#[no_mangle]
pub extern "C" fn rn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by an `rn_*_to_csv` call.
#[no_mangle]
pub unsafe extern "C" fn rn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a network definition.
#[no_mangle]
pub unsafe extern "C" fn rn_network_parse(definition: *const c_char, out: *mut *mut RnNetwork) -> RnStatus {
    guard(|| {
        let net =
            parse_network(text(definition, "definition")?).map_err(|e| Failure(RnStatus::Parse, e.to_string()))?;
        store(out, RnNetwork(net))
    })
}

/// Built-in benchmark network, `"bistable"` or `"limit_cycle"`, at system size `omega`.
#[no_mangle]
pub unsafe extern "C" fn rn_network_builtin(name: *const c_char, omega: f64, out: *mut *mut RnNetwork) -> RnStatus {
    guard(|| {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(invalid(format!("omega = {omega} must be positive")));
        }
        let net = match text(name, "name")? {
            "bistable" => library::bistable(omega, [22.5, 37.5, 18.0, 2.5]),
            "limit_cycle" => library::limit_cycle(omega, [3.1, 1.0, 1.0, 1.0, 1.0]),
            other => return Err(invalid(format!("unknown built-in network `{other}`"))),
        };
        store(out, RnNetwork(net))
    })
}

/// Number of species; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn rn_network_n_species(net: *const RnNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.n_species())
}

#[no_mangle]
pub unsafe extern "C" fn rn_network_free(net: *mut RnNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Exact path on `[t0, t_end]` from the `n` counts in `x0`.
#[no_mangle]
pub unsafe extern "C" fn rn_simulate(
    net: *const RnNetwork,
    x0: *const i64,
    n: usize,
    t0: f64,
    t_end: f64,
    seed: u64,
    out: *mut *mut RnPath,
) -> RnStatus {
    guard(|| {
        let net = borrow(net, "network")?;
        let x0 = slice(x0, n, "x0")?;
        let path = ssa_simulate(&net.0, x0, t0, t_end, seed)?;
        store(out, RnPath(path))
    })
}

/// Number of stored states: the initial one plus one per jump.
#[no_mangle]
pub unsafe extern "C" fn rn_path_len(path: *const RnPath) -> usize {
    path.as_ref().map_or(0, |p| p.0.times().len())
}

/// Writes the `n` counts active at time `t` into `state`.
#[no_mangle]
pub unsafe extern "C" fn rn_path_sample_at(path: *const RnPath, t: f64, state: *mut i64, n: usize) -> RnStatus {
    guard(|| {
        let path = borrow(path, "path")?;
        if n != path.0.n_species() {
            return Err(invalid(format!(
                "buffer holds {n} values, path has {} species",
                path.0.n_species()
            )));
        }
        if state.is_null() {
            return Err(Failure(RnStatus::NullPointer, "state buffer is null".into()));
        }
        let x = path.0.sample_at(t)?;
        std::slice::from_raw_parts_mut(state, n).copy_from_slice(x);
        Ok(())
    })
}

/// CSV export of the path; release with [`rn_string_free`].
#[no_mangle]
pub unsafe extern "C" fn rn_path_to_csv(path: *const RnPath) -> *mut c_char {
    match path.as_ref() {
        Some(p) => CString::new(p.0.to_csv()).map_or(ptr::null_mut(), CString::into_raw),
        None => ptr::null_mut(),
    }
}

#[no_mangle]
pub unsafe extern "C" fn rn_path_free(path: *mut RnPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// Observes `path` every `dt` through the row-major `d × n` matrix `g`
/// with noise covariance `v·I`.
#[no_mangle]
pub unsafe extern "C" fn rn_observe(
    path: *const RnPath,
    dt: f64,
    v: f64,
    g: *const f64,
    d: usize,
    seed: u64,
    out: *mut *mut RnObservations,
) -> RnStatus {
    guard(|| {
        let path = borrow(path, "path")?;
        let n = path.0.n_species();
        if d == 0 {
            return Err(invalid("observation dimension must be positive"));
        }
        let g = DMatrix::from_row_slice(d, n, slice(g, d * n, "G")?);
        let v = DMatrix::from_diagonal_element(d, d, v);
        let times = observation_times(path.0.t0(), path.0.t_end(), dt);
        let obs = observe(&path.0, &times, &g, &v, seed)?;
        store(out, RnObservations(obs))
    })
}

/// Number of observation times.
#[no_mangle]
pub unsafe extern "C" fn rn_observations_len(obs: *const RnObservations) -> usize {
    obs.as_ref().map_or(0, |o| o.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn rn_observations_to_csv(obs: *const RnObservations) -> *mut c_char {
    match obs.as_ref() {
        Some(o) => CString::new(o.0.to_csv()).map_or(ptr::null_mut(), CString::into_raw),
        None => ptr::null_mut(),
    }
}

#[no_mangle]
pub unsafe extern "C" fn rn_observations_free(obs: *mut RnObservations) {
    if !obs.is_null() {
        drop(Box::from_raw(obs));
    }
}

/// Runs one filter from its default prior up to `t_end`, sampling the MAP
/// estimate every `out_dt`.
#[no_mangle]
pub unsafe extern "C" fn rn_filter_run(
    net: *const RnNetwork,
    kind: RnFilterKind,
    obs: *const RnObservations,
    t_end: f64,
    out_dt: f64,
    out: *mut *mut RnTrajectory,
) -> RnStatus {
    guard(|| {
        let net = borrow(net, "network")?;
        let obs = borrow(obs, "observations")?;
        let kind = FilterKind::from(kind);
        let init = FilterInit::default_for(&net.0, kind, &obs.0)?;
        let settings = FilterSettings {
            out_dt,
            t_end: Some(t_end),
            ..FilterSettings::default()
        };
        let trail = run_filter(&net.0, kind, &obs.0, &init, &settings)?;
        let dim = net.0.n_species();
        store(
            out,
            RnTrajectory {
                map: trail.map.iter().flatten().copied().collect(),
                times: trail.times,
                dim,
            },
        )
    })
}

/// Number of output grid points.
#[no_mangle]
pub unsafe extern "C" fn rn_trajectory_len(traj: *const RnTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.times.len())
}

/// State dimension of the MAP estimate.
#[no_mangle]
pub unsafe extern "C" fn rn_trajectory_dim(traj: *const RnTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.dim)
}

/// Copies the grid times into `buf`, which holds `len` values.
#[no_mangle]
pub unsafe extern "C" fn rn_trajectory_times(traj: *const RnTrajectory, buf: *mut f64, len: usize) -> RnStatus {
    guard(|| {
        let traj = borrow(traj, "trajectory")?;
        copy_out(&traj.times, buf, len)
    })
}

/// Copies the MAP trail, row-major (`len × dim`), into `buf`.
#[no_mangle]
pub unsafe extern "C" fn rn_trajectory_map(traj: *const RnTrajectory, buf: *mut f64, len: usize) -> RnStatus {
    guard(|| {
        let traj = borrow(traj, "trajectory")?;
        copy_out(&traj.map, buf, len)
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), Failure> {
    if len != src.len() {
        return Err(invalid(format!("buffer holds {len} values, {} needed", src.len())));
    }
    if buf.is_null() {
        return Err(Failure(RnStatus::NullPointer, "buffer is null".into()));
    }
    std::slice::from_raw_parts_mut(buf, len).copy_from_slice(src);
    Ok(())
}

#[no_mangle]
pub unsafe extern "C" fn rn_trajectory_free(traj: *mut RnTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Time-averaged squared distance between the path and the MAP trail.
#[no_mangle]
pub unsafe extern "C" fn rn_mse(path: *const RnPath, traj: *const RnTrajectory, out: *mut f64) -> RnStatus {
    guard(|| {
        let path = borrow(path, "path")?;
        let traj = borrow(traj, "trajectory")?;
        if out.is_null() {
            return Err(Failure(RnStatus::NullPointer, "output is null".into()));
        }
        let estimate = rnfilter::filters::FilteredTrajectory {
            kind: FilterKind::Gpf,
            times: traj.times.clone(),
            map: traj.map.chunks(traj.dim.max(1)).map(<[f64]>::to_vec).collect(),
            params: Vec::new(),
            corrected: Vec::new(),
        };
        *out = bench::mse(&path.0, &estimate).map_err(|e| invalid(e.to_string()))?;
        Ok(())
    })
}
