//! C interface to `stt-core`.
//!
//! Scenarios, syntheses and traces are opaque handles created by the library
//! and released with their `*_free` function. Every fallible call returns an
//! [`SttStatus`]; on failure a message is kept per thread and can be read with
//! [`stt_last_error_message`] until the next failing call on that thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use stt_core::controller::control_input;
use stt_core::io::{parse_scenario, parse_scenario_str, Scenario};
use stt_core::metrics::{Comparison, EffortReport};
use stt_core::pipeline::{compare, run_closed_loop, synthesize, write_run, write_synthesis, RunMetadata, Synthesis};
use stt_core::plant::SimTrace;
use stt_core::SttError;

/// Result of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SttStatus {
    Ok = 0,
    /// A required pointer was null.
    NullArgument = 1,
    /// A value was out of range, a buffer too short or a string not UTF-8.
    InvalidArgument = 2,
    /// The scenario text or file failed validation.
    Config = 3,
    InvalidTask = 4,
    /// The task breaks an assumption the synthesis needs.
    Assumption = 5,
    /// No admissible detour exists for some obstacle.
    Infeasible = 6,
    SynthesisFailure = 7,
    /// The state left the tube.
    TubeViolation = 8,
    Precondition = 9,
    Io = 10,
    /// Malformed tube file or serialization failure.
    Format = 11,
    /// A Rust panic was caught at the boundary.
    Internal = 12,
}

/// Opaque scenario handle.
pub struct SttScenario(Scenario);

/// Opaque handle holding the planned detours and the integrated tube.
pub struct SttSynthesis(Synthesis);

/// Opaque closed-loop trace handle.
pub struct SttTrace(SimTrace);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SttFlags {
    pub reached: bool,
    pub safe: bool,
    pub contained: bool,
    pub stayed: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SttEffort {
    pub energy: f64,
    pub peak: f64,
    pub l1: f64,
}

/// Smooth tube against the reconstructed abrupt baseline. Ratios are
/// smooth / baseline.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SttComparison {
    pub smooth: SttEffort,
    pub baseline: SttEffort,
    pub energy_ratio: f64,
    pub peak_ratio: f64,
    pub l1_ratio: f64,
    pub smooth_wins: bool,
}

impl From<EffortReport> for SttEffort {
    fn from(r: EffortReport) -> Self {
        Self {
            energy: r.energy,
            peak: r.peak,
            l1: r.l1,
        }
    }
}

impl From<&Comparison> for SttComparison {
    fn from(c: &Comparison) -> Self {
        Self {
            smooth: c.smooth.effort.into(),
            baseline: c.baseline.effort.into(),
            energy_ratio: c.energy_ratio,
            peak_ratio: c.peak_ratio,
            l1_ratio: c.l1_ratio,
            smooth_wins: c.smooth_wins(),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SttStatus, String);

impl From<SttError> for Failure {
    fn from(e: SttError) -> Self {
        let status = match &e {
            SttError::Config(_) => SttStatus::Config,
            SttError::DimensionMismatch { .. } | SttError::InvalidInterval { .. } | SttError::InvalidTask(_) => {
                SttStatus::InvalidTask
            }
            SttError::AssumptionViolation(_) => SttStatus::Assumption,
            SttError::Infeasible { .. } => SttStatus::Infeasible,
            SttError::SynthesisFailure { .. } => SttStatus::SynthesisFailure,
            SttError::TubeViolation { .. } => SttStatus::TubeViolation,
            SttError::Precondition(_) | SttError::EmptyTrace => SttStatus::Precondition,
            SttError::Io(_) => SttStatus::Io,
            SttError::TubeFormat(_) | SttError::Csv(_) | SttError::Json(_) => SttStatus::Format,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SttStatus::NullArgument, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(SttStatus::InvalidArgument, msg.into())
}

/// Runs `f`, turning errors and panics into a status plus the thread's last
/// error message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SttStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SttStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            SttStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn obj_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, need: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    if len < need {
        return Err(invalid(format!("{what} holds {len} values, {need} needed")));
    }
    Ok(std::slice::from_raw_parts(p, need))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, need: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    if len < need {
        return Err(invalid(format!("{what} holds {len} values, {need} needed")));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn stt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failing call on this thread, or null if there is none.
/// The pointer stays valid until the next failing call or
/// [`stt_clear_last_error`] on the same thread.
#[no_mangle]
pub extern "C" fn stt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn stt_clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Loads and validates a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stt_scenario_load(path: *const c_char, out: *mut *mut SttScenario) -> SttStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, SttScenario(parse_scenario(Path::new(path))?));
        Ok(())
    })
}

/// Parses scenario text. `name` labels error messages and outputs and may be
/// null.
///
/// # Safety
/// `text` and a non-null `name` must be NUL-terminated strings; `out` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stt_scenario_parse(
    text: *const c_char,
    name: *const c_char,
    out: *mut *mut SttScenario,
) -> SttStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let name = if name.is_null() { "scenario" } else { str_arg(name, "name")? };
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, SttScenario(parse_scenario_str(text, name)?));
        Ok(())
    })
}

/// # Safety
/// `sc` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stt_scenario_free(sc: *mut SttScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// Full state dimension, 0 for a null handle.
///
/// # Safety
/// `sc` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn stt_scenario_state_dim(sc: *const SttScenario) -> usize {
    sc.as_ref().map_or(0, |s| s.0.task.dim())
}

/// Prescribed completion time `t_c`, NaN for a null handle.
///
/// # Safety
/// `sc` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn stt_scenario_completion_time(sc: *const SttScenario) -> f64 {
    sc.as_ref().map_or(f64::NAN, |s| s.0.task.t_c)
}

/// # Safety
/// `sc` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn stt_scenario_set_seed(sc: *mut SttScenario, seed: u64) -> SttStatus {
    guard(|| {
        obj_mut(sc, "scenario")?.0.disturbance.seed = seed;
        Ok(())
    })
}

/// Sets the closed-loop step used by both simulation and comparison.
///
/// # Safety
/// `sc` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn stt_scenario_set_dt(sc: *mut SttScenario, dt: f64) -> SttStatus {
    guard(|| {
        let sc = obj_mut(sc, "scenario")?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {dt}")));
        }
        sc.0.sim.dt = dt;
        sc.0.compare_dt = dt;
        Ok(())
    })
}

/// # Safety
/// `sc` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn stt_scenario_set_stay_horizon(sc: *mut SttScenario, horizon: f64) -> SttStatus {
    guard(|| {
        let sc = obj_mut(sc, "scenario")?;
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(invalid(format!("stay horizon must be non-negative, got {horizon}")));
        }
        sc.0.sim.stay_horizon = horizon;
        Ok(())
    })
}

/// Plans the detours and integrates the tube. A tube that fails its own
/// verification is still returned; check [`stt_synthesis_passed`].
///
/// # Safety
/// `sc` must be a live scenario handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stt_synthesize(sc: *const SttScenario, out: *mut *mut SttSynthesis) -> SttStatus {
    guard(|| {
        let sc = obj(sc, "scenario")?;
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, SttSynthesis(synthesize(&sc.0)?));
        Ok(())
    })
}

/// # Safety
/// `syn` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stt_synthesis_free(syn: *mut SttSynthesis) {
    if !syn.is_null() {
        drop(Box::from_raw(syn));
    }
}

/// Whether assumptions, tube verification and the smoothness scan all pass.
///
/// # Safety
/// `syn` must be a live synthesis handle and `passed` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stt_synthesis_passed(syn: *const SttSynthesis, passed: *mut bool) -> SttStatus {
    guard(|| {
        let syn = obj(syn, "synthesis")?;
        *obj_mut(passed, "passed")? = syn.0.report.pass();
        Ok(())
    })
}

/// Number of obstacles that needed a detour.
///
/// # Safety
/// `syn` must be null or a live synthesis handle.
#[no_mangle]
pub unsafe extern "C" fn stt_synthesis_detour_count(syn: *const SttSynthesis) -> usize {
    syn.as_ref().map_or(0, |s| s.0.plans.len())
}

/// Tube bounds at time `t`, linearly interpolated and held after `t_c`.
/// `lower` and `upper` must each hold at least the state dimension.
///
/// # Safety
/// `syn` must be a live synthesis handle; `lower` and `upper` must point to
/// `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn stt_synthesis_tube_at(
    syn: *const SttSynthesis,
    t: f64,
    lower: *mut f64,
    upper: *mut f64,
    len: usize,
) -> SttStatus {
    guard(|| {
        let tube = &obj(syn, "synthesis")?.0.tube;
        if !t.is_finite() {
            return Err(invalid("t must be finite"));
        }
        let n = tube.dim();
        let lower = slice_mut(lower, len, n, "lower")?;
        let upper = slice_mut(upper, len, n, "upper")?;
        tube.eval_into(t, lower, upper);
        Ok(())
    })
}

/// Writes `tube.csv` and `synthesis.json` into `dir`, creating it if needed.
///
/// # Safety
/// `syn` must be a live synthesis handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn stt_synthesis_write(syn: *const SttSynthesis, dir: *const c_char) -> SttStatus {
    guard(|| {
        let syn = obj(syn, "synthesis")?;
        let dir = str_arg(dir, "dir")?;
        write_synthesis(Path::new(dir), &syn.0)?;
        Ok(())
    })
}

/// Control input for state `x` at time `t` using the scenario's controller
/// and the synthesized tube. Fails with `STT_STATUS_TUBE_VIOLATION` when `x`
/// is not strictly inside the tube.
///
/// # Safety
/// Handles must be live; `x` must point to `len` readable doubles and `u` to
/// `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn stt_control_input(
    sc: *const SttScenario,
    syn: *const SttSynthesis,
    t: f64,
    x: *const f64,
    u: *mut f64,
    len: usize,
) -> SttStatus {
    guard(|| {
        let sc = obj(sc, "scenario")?;
        let syn = obj(syn, "synthesis")?;
        let n = syn.0.tube.dim();
        let x = slice(x, len, n, "x")?;
        let u = slice_mut(u, len, n, "u")?;
        let frame = syn.0.tube.frame(t);
        u.copy_from_slice(&control_input(x, &frame, &sc.0.controller, t)?);
        Ok(())
    })
}

/// Runs the closed loop from the scenario's initial state. A run that leaves
/// the tube still yields a trace whose flags and last row record the failure.
///
/// # Safety
/// Handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stt_simulate(
    sc: *const SttScenario,
    syn: *const SttSynthesis,
    out: *mut *mut SttTrace,
) -> SttStatus {
    guard(|| {
        let sc = obj(sc, "scenario")?;
        let syn = obj(syn, "synthesis")?;
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, SttTrace(run_closed_loop(&sc.0, &syn.0, &syn.0.tube, &sc.0.sim)?));
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stt_trace_free(trace: *mut SttTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of recorded rows, 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn stt_trace_rows(trace: *const SttTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.rows())
}

/// Copies row `row`: its time into `t`, the state into `x` and the input into
/// `u` (NaN on the row recording a tube exit). Any of the three may be null.
///
/// # Safety
/// `trace` must be a live trace handle; non-null `x`/`u` must point to `len`
/// writable doubles and a non-null `t` to one.
#[no_mangle]
pub unsafe extern "C" fn stt_trace_row(
    trace: *const SttTrace,
    row: usize,
    t: *mut f64,
    x: *mut f64,
    u: *mut f64,
    len: usize,
) -> SttStatus {
    guard(|| {
        let tr = &obj(trace, "trace")?.0;
        if row >= tr.rows() {
            return Err(invalid(format!("row {row} out of range ({} rows)", tr.rows())));
        }
        if let Some(t) = t.as_mut() {
            *t = tr.t[row];
        }
        if !x.is_null() {
            slice_mut(x, len, tr.n, "x")?.copy_from_slice(tr.state(row));
        }
        if !u.is_null() {
            slice_mut(u, len, tr.n, "u")?.copy_from_slice(tr.input(row));
        }
        Ok(())
    })
}

/// # Safety
/// `trace` must be a live trace handle and `flags` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stt_trace_flags(trace: *const SttTrace, flags: *mut SttFlags) -> SttStatus {
    guard(|| {
        let f = &obj(trace, "trace")?.0.flags;
        *obj_mut(flags, "flags")? = SttFlags {
            reached: f.reached,
            safe: f.safe,
            contained: f.contained,
            stayed: f.stayed,
        };
        Ok(())
    })
}

/// Effort over `[0, t_c]` on the full integration grid.
///
/// # Safety
/// `trace` must be a live trace handle and `effort` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stt_trace_effort(trace: *const SttTrace, effort: *mut SttEffort) -> SttStatus {
    guard(|| {
        let tr = obj(trace, "trace")?;
        *obj_mut(effort, "effort")? = tr.0.effort.into();
        Ok(())
    })
}

/// Writes `trace.csv` and `trace.json` into `dir`.
///
/// # Safety
/// Handles must be live and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn stt_trace_write(
    sc: *const SttScenario,
    trace: *const SttTrace,
    dir: *const c_char,
) -> SttStatus {
    guard(|| {
        let sc = obj(sc, "scenario")?;
        let tr = obj(trace, "trace")?;
        let dir = str_arg(dir, "dir")?;
        write_run(Path::new(dir), &tr.0, &RunMetadata::new(&sc.0, &tr.0))?;
        Ok(())
    })
}

/// Effort of the smooth tube against the reconstructed abrupt baseline, both
/// run with the scenario's seed, gain and comparison step.
///
/// # Safety
/// Handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stt_compare(
    sc: *const SttScenario,
    syn: *const SttSynthesis,
    out: *mut SttComparison,
) -> SttStatus {
    guard(|| {
        let sc = obj(sc, "scenario")?;
        let syn = obj(syn, "synthesis")?;
        let out = obj_mut(out, "out")?;
        *out = (&compare(&sc.0, &syn.0)?).into();
        Ok(())
    })
}
