//! C ABI for dcfsim.
//!
//! Scenarios and results are opaque heap handles owned by the caller and
//! released with the matching `_free` function. Every fallible call returns
//! a [`DcfsimStatus`]; on failure a message is available from
//! [`dcfsim_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use dcfsim::config::ScenarioConfig;
use dcfsim::radio::{self, FadingModel, RadioParams};
use dcfsim::scenario::{Metrics, Simulation};
use dcfsim::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcfsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Parse = 3,
    Config = 4,
    Io = 5,
    /// The simulated protocol broke one of its invariants.
    Fault = 6,
    OutOfRange = 7,
    /// A Rust panic was caught at the boundary.
    Panic = 8,
}

/// Opaque scenario handle.
pub struct DcfsimScenario {
    cfg: ScenarioConfig,
}

/// Opaque result handle.
pub struct DcfsimResult {
    metrics: Metrics,
}

/// Per-flow results, measured inside the scenario's measurement window.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DcfsimFlowStats {
    pub src: u32,
    pub dst: u32,
    pub payload: u32,
    pub throughput_bps: f64,
    pub share: f64,
    pub delivered_bytes: u64,
    pub captures: u64,
    pub collisions: u64,
    pub retry_drops: u64,
    pub queue_drops: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn status_of(e: &Error) -> DcfsimStatus {
    match e {
        Error::InvalidInput(_) => DcfsimStatus::InvalidInput,
        Error::Fault(_) => DcfsimStatus::Fault,
        Error::Parse { .. } => DcfsimStatus::Parse,
        Error::Config(_) => DcfsimStatus::Config,
        Error::Io(_) | Error::Csv(_) => DcfsimStatus::Io,
    }
}

fn fail(status: DcfsimStatus, msg: impl Into<String>) -> DcfsimStatus {
    set_error(msg);
    status
}

/// Run `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), DcfsimStatus>) -> DcfsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DcfsimStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(DcfsimStatus::Panic, msg)
        }
    }
}

fn lift<T>(r: dcfsim::Result<T>) -> Result<T, DcfsimStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, DcfsimStatus> {
    if p.is_null() {
        return Err(fail(DcfsimStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(DcfsimStatus::InvalidInput, "string argument is not UTF-8"))
}

unsafe fn handle<'a, T>(p: *mut T) -> Result<&'a mut T, DcfsimStatus> {
    p.as_mut().ok_or_else(|| fail(DcfsimStatus::NullPointer, "null handle"))
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), DcfsimStatus> {
    if out.is_null() {
        return Err(fail(DcfsimStatus::NullPointer, "null output pointer"));
    }
    out.write(v);
    Ok(())
}

unsafe fn new_scenario(out: *mut *mut DcfsimScenario, cfg: ScenarioConfig) -> Result<(), DcfsimStatus> {
    put(out, Box::into_raw(Box::new(DcfsimScenario { cfg })))
}

/// Message for the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dcfsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dcfsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse a scenario from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcfsim_scenario_from_toml(toml: *const c_char, out: *mut *mut DcfsimScenario) -> DcfsimStatus {
    guard(|| {
        let cfg = lift(ScenarioConfig::parse(str_arg(toml)?))?;
        new_scenario(out, cfg)
    })
}

/// Load a scenario from a TOML file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcfsim_scenario_from_file(path: *const c_char, out: *mut *mut DcfsimScenario) -> DcfsimStatus {
    guard(|| {
        let cfg = lift(ScenarioConfig::from_file(Path::new(str_arg(path)?)))?;
        new_scenario(out, cfg)
    })
}

/// Load a built-in scenario ("baseline_single_flow", "fig6_analog",
/// "fig8_capture").
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcfsim_scenario_preset(name: *const c_char, out: *mut *mut DcfsimScenario) -> DcfsimStatus {
    guard(|| {
        let cfg = lift(ScenarioConfig::preset(str_arg(name)?))?;
        new_scenario(out, cfg)
    })
}

/// Release a scenario. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dcfsim_scenario_free(s: *mut DcfsimScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Apply `f` to the scenario, rolling back if the result does not validate.
unsafe fn edit(s: *mut DcfsimScenario, f: impl FnOnce(&mut ScenarioConfig)) -> DcfsimStatus {
    guard(|| {
        let h = handle(s)?;
        let mut cfg = h.cfg.clone();
        f(&mut cfg);
        lift(cfg.validate())?;
        h.cfg = cfg;
        Ok(())
    })
}

/// Set the layout distance used by polar-placed nodes, in meters.
///
/// # Safety
/// `s` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn dcfsim_scenario_set_distance(s: *mut DcfsimScenario, meters: f64) -> DcfsimStatus {
    edit(s, |c| c.layout.distance = Some(meters))
}

/// # Safety
/// `s` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn dcfsim_scenario_set_seed(s: *mut DcfsimScenario, seed: u64) -> DcfsimStatus {
    edit(s, |c| c.seed = seed)
}

/// # Safety
/// `s` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn dcfsim_scenario_set_duration(s: *mut DcfsimScenario, seconds: f64) -> DcfsimStatus {
    edit(s, |c| c.duration = seconds)
}

/// Enable (non-zero) or disable Rayleigh fading.
///
/// # Safety
/// `s` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn dcfsim_scenario_set_fading(s: *mut DcfsimScenario, enabled: bool) -> DcfsimStatus {
    edit(s, |c| {
        c.radio.fading = if enabled { FadingModel::Rayleigh } else { FadingModel::None }
    })
}

/// # Safety
/// `s` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn dcfsim_scenario_set_eifs(s: *mut DcfsimScenario, enabled: bool) -> DcfsimStatus {
    edit(s, |c| c.mac.eifs_enabled = enabled)
}

/// Frames larger than `bytes` use RTS/CTS; 0 forces it for every frame.
///
/// # Safety
/// `s` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn dcfsim_scenario_set_rts_threshold(s: *mut DcfsimScenario, bytes: u32) -> DcfsimStatus {
    edit(s, |c| c.mac.rts_threshold = bytes)
}

/// Serialize the scenario, with defaults filled in, as TOML. Release the
/// string with [`dcfsim_string_free`].
///
/// # Safety
/// `s` must be a live scenario handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcfsim_scenario_to_toml(s: *const DcfsimScenario, out: *mut *mut c_char) -> DcfsimStatus {
    guard(|| {
        let h = handle(s.cast_mut())?;
        let text = CString::new(h.cfg.emit()).map_err(|_| fail(DcfsimStatus::InvalidInput, "NUL in config"))?;
        put(out, text.into_raw())
    })
}

/// # Safety
/// `p` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dcfsim_string_free(p: *mut c_char) {
    if !p.is_null() {
        drop(CString::from_raw(p));
    }
}

/// Run the scenario to completion.
///
/// # Safety
/// `s` must be a live scenario handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcfsim_run(s: *const DcfsimScenario, out: *mut *mut DcfsimResult) -> DcfsimStatus {
    guard(|| {
        let h = handle(s.cast_mut())?;
        let mut cfg = h.cfg.clone();
        cfg.trace = false;
        let run = lift(Simulation::run_config(&cfg))?;
        put(out, Box::into_raw(Box::new(DcfsimResult { metrics: run.metrics })))
    })
}

/// # Safety
/// `r` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dcfsim_result_free(r: *mut DcfsimResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Aggregate throughput in bits/s; NaN for a NULL handle.
///
/// # Safety
/// `r` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn dcfsim_result_total_throughput(r: *const DcfsimResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.metrics.total_throughput_bps)
}

/// Number of flows; 0 for a NULL handle.
///
/// # Safety
/// `r` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn dcfsim_result_flow_count(r: *const DcfsimResult) -> usize {
    r.as_ref().map_or(0, |r| r.metrics.flows.len())
}

/// Copy flow `index`'s statistics into `out`.
///
/// # Safety
/// `r` must be a live result handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcfsim_result_flow(r: *const DcfsimResult, index: usize, out: *mut DcfsimFlowStats) -> DcfsimStatus {
    guard(|| {
        let h = handle(r.cast_mut())?;
        let f = h.metrics.flows.get(index).ok_or_else(|| {
            fail(
                DcfsimStatus::OutOfRange,
                format!("flow {index} out of range (have {})", h.metrics.flows.len()),
            )
        })?;
        put(
            out,
            DcfsimFlowStats {
                src: f.src.0,
                dst: f.dst.0,
                payload: f.payload,
                throughput_bps: f.throughput_bps,
                share: f.share,
                delivered_bytes: f.window.delivered_bytes,
                captures: f.window.captures,
                collisions: f.window.collisions,
                retry_drops: f.window.retry_drops,
                queue_drops: f.window.queue_drops,
            },
        )
    })
}

/// Mean received power (W) at `meters` under the two-ray ground model with
/// the default radio.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcfsim_two_ray_pr(meters: f64, out: *mut f64) -> DcfsimStatus {
    guard(|| put(out, lift(radio::two_ray_pr(&RadioParams::default(), meters))?))
}

/// Distance (m) at which the default radio's mean power falls to
/// `threshold_w`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcfsim_get_dist(threshold_w: f64, out: *mut f64) -> DcfsimStatus {
    guard(|| put(out, lift(radio::get_dist(threshold_w, &RadioParams::default()))?))
}

/// Default reception threshold (W), giving a 250 m range.
#[no_mangle]
pub extern "C" fn dcfsim_default_rx_thresh() -> f64 {
    radio::default_rx_thresh()
}

/// Default carrier-sense threshold (W), giving a 550 m range.
#[no_mangle]
pub extern "C" fn dcfsim_default_cs_thresh() -> f64 {
    radio::default_cs_thresh()
}
