//! C ABI for `cbf-transit`.
//!
//! Scenarios and trajectory logs are opaque heap handles owned by the caller
//! and released with their `_free` function. Every fallible call returns a
//! [`CbfStatus`]; on failure the message is available from
//! [`cbf_last_error_message`] on the same thread. Panics never cross the
//! boundary and are reported as [`CbfStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use cbf_transit::harness::{
    continuity_metric, emit_outputs, load_scenario, run, HarnessError, Mode, OutputOptions, Scenario, Termination,
    TrajectoryLog,
};
use cbf_transit::qp::{solve_min_norm, HalfplaneConstraint, QpProblem};
use cbf_transit::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    Infeasible = 6,
    Numerical = 7,
    OutOfRange = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbfMode {
    Smooth = 0,
    Discrete = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbfTermination {
    Completed = 0,
    Infeasible = 1,
    TimedOut = 2,
}

/// Per-step quantities that [`cbf_log_copy`] can extract.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbfField {
    State = 0,
    /// QP decision variable.
    Control = 1,
    /// Input applied to the plant.
    Applied = 2,
    Alpha = 3,
    AlphaDot = 4,
    /// Reachability barriers, then safety barriers.
    Barriers = 5,
}

/// Opaque scenario handle.
pub struct CbfScenario(Scenario);

/// Opaque trajectory log handle.
pub struct CbfLog(TrajectoryLog);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

struct Failure(CbfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Infeasible(_) => CbfStatus::Infeasible,
            Error::Numerical(_) => CbfStatus::Numerical,
            Error::Config(_) | Error::Sequencing(_) => CbfStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let msg = e.to_string();
        match e {
            HarnessError::Io { .. } => Failure(CbfStatus::Io, msg),
            HarnessError::Parse(_) => Failure(CbfStatus::Parse, msg),
            HarnessError::Validation(_) => Failure(CbfStatus::Validation, msg),
            HarnessError::Core(e) => Failure(Failure::from(e).0, msg),
        }
    }
}

fn fail(status: CbfStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, recording any error or panic in the thread's last-error slot.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CbfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CbfStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            CbfStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(CbfStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CbfStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(CbfStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(CbfStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(CbfStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn cbf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cbf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a scenario from a JSON file, or a bundled scenario by name when no
/// such file exists.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cbf_scenario_load(path: *const c_char, out: *mut *mut CbfScenario) -> CbfStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let scenario = if !Path::new(path).exists() && Scenario::BUNDLED.contains(&path) {
            Scenario::bundled(path)?
        } else {
            load_scenario(path)?
        };
        *out = Box::into_raw(Box::new(CbfScenario(scenario)));
        Ok(())
    })
}

/// Parses a scenario from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cbf_scenario_from_json(json: *const c_char, out: *mut *mut CbfScenario) -> CbfStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(CbfScenario(Scenario::from_json(json)?)));
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from this library and not be used afterwards.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cbf_scenario_free(scenario: *mut CbfScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Overrides the integration step and time limit. Pass a non-positive
/// value to keep the current setting. The scenario is left unchanged when
/// the result does not validate.
///
/// # Safety
/// `scenario` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn cbf_scenario_set_timing(scenario: *mut CbfScenario, dt: f64, t_max: f64) -> CbfStatus {
    guard(|| {
        let s = &mut out_arg(scenario, "scenario")?.0;
        let mut next = s.clone();
        if dt > 0.0 {
            next.dt = dt;
        }
        if t_max > 0.0 {
            next.t_max = t_max;
        }
        next.validate()?;
        *s = next;
        Ok(())
    })
}

/// Integration step of the scenario.
///
/// # Safety
/// `scenario` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cbf_scenario_dt(scenario: *const CbfScenario, out: *mut f64) -> CbfStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(scenario, "scenario")?.0.dt;
        Ok(())
    })
}

/// Simulates the scenario. An infeasible QP or a timeout still yields a log;
/// check [`cbf_log_termination`].
///
/// # Safety
/// `scenario` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cbf_run(scenario: *const CbfScenario, mode: CbfMode, out: *mut *mut CbfLog) -> CbfStatus {
    guard(|| {
        let s = &ref_arg(scenario, "scenario")?.0;
        let out = out_arg(out, "out")?;
        let mode = match mode {
            CbfMode::Smooth => Mode::Smooth,
            CbfMode::Discrete => Mode::Discrete,
        };
        *out = Box::into_raw(Box::new(CbfLog(run(s, mode)?)));
        Ok(())
    })
}

/// # Safety
/// `log` must come from this library and not be used afterwards.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cbf_log_free(log: *mut CbfLog) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}

/// Number of records; 0 for a null handle.
///
/// # Safety
/// `log` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn cbf_log_len(log: *const CbfLog) -> usize {
    log.as_ref().map_or(0, |l| l.0.len())
}

/// # Safety
/// `log` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cbf_log_termination(log: *const CbfLog, out: *mut CbfTermination) -> CbfStatus {
    guard(|| {
        *out_arg(out, "out")? = match ref_arg(log, "log")?.0.termination {
            Termination::Completed => CbfTermination::Completed,
            Termination::Infeasible => CbfTermination::Infeasible,
            Termination::TimedOut => CbfTermination::TimedOut,
        };
        Ok(())
    })
}

/// Time of record `index`.
///
/// # Safety
/// `log` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cbf_log_time(log: *const CbfLog, index: usize, out: *mut f64) -> CbfStatus {
    guard(|| {
        let log = &ref_arg(log, "log")?.0;
        let r = log
            .records
            .get(index)
            .ok_or_else(|| fail(CbfStatus::OutOfRange, format!("record {index} of {}", log.len())))?;
        *out_arg(out, "out")? = r.t;
        Ok(())
    })
}

/// Copies one field of record `index` into `buf`. `written` receives the
/// field length; when `capacity` is too small nothing is copied and
/// [`CbfStatus::BufferTooSmall`] is returned, so a first call with
/// `capacity = 0` queries the size.
///
/// # Safety
/// `log` must be a valid handle, `written` a valid pointer and `buf` valid
/// for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn cbf_log_copy(
    log: *const CbfLog,
    index: usize,
    field: CbfField,
    buf: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> CbfStatus {
    guard(|| {
        let log = &ref_arg(log, "log")?.0;
        let written = out_arg(written, "written")?;
        let r = log
            .records
            .get(index)
            .ok_or_else(|| fail(CbfStatus::OutOfRange, format!("record {index} of {}", log.len())))?;
        let src = match field {
            CbfField::State => &r.state,
            CbfField::Control => &r.u,
            CbfField::Applied => &r.applied,
            CbfField::Alpha => &r.alpha,
            CbfField::AlphaDot => &r.alpha_dot,
            CbfField::Barriers => &r.h,
        };
        copy_out(src, buf, capacity, written)
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, capacity: usize, written: &mut usize) -> Result<(), Failure> {
    *written = src.len();
    if capacity < src.len() {
        return Err(fail(CbfStatus::BufferTooSmall, format!("need {} values, got room for {capacity}", src.len())));
    }
    if !src.is_empty() {
        if buf.is_null() {
            return Err(fail(CbfStatus::NullPointer, "buf is null"));
        }
        std::ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    Ok(())
}

/// Arrival times at each task's target, in task order. Same buffer protocol
/// as [`cbf_log_copy`].
///
/// # Safety
/// As for [`cbf_log_copy`].
#[no_mangle]
pub unsafe extern "C" fn cbf_log_arrival_times(
    log: *const CbfLog,
    buf: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> CbfStatus {
    guard(|| {
        let log = &ref_arg(log, "log")?.0;
        copy_out(&log.arrival_times(), buf, capacity, out_arg(written, "written")?)
    })
}

/// Largest step-to-step change of the QP decision variable, infinity norm.
///
/// # Safety
/// `log` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cbf_log_max_jump(log: *const CbfLog, out: *mut f64) -> CbfStatus {
    guard(|| {
        *out_arg(out, "out")? = continuity_metric(&ref_arg(log, "log")?.0).max_jump;
        Ok(())
    })
}

/// Writes the CSV, events JSON and SVG plots into `dir`.
///
/// # Safety
/// Handles must be valid and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cbf_log_write_outputs(
    log: *const CbfLog,
    scenario: *const CbfScenario,
    dir: *const c_char,
) -> CbfStatus {
    guard(|| {
        let log = &ref_arg(log, "log")?.0;
        let s = &ref_arg(scenario, "scenario")?.0;
        let dir = str_arg(dir, "dir")?;
        emit_outputs(log, &continuity_metric(log), s, Path::new(dir), OutputOptions::default())?;
        Ok(())
    })
}

/// `-ln(sum(exp(-v_i)))` of `len > 0` values.
///
/// # Safety
/// `values` must be valid for `len` reads and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cbf_softmin(values: *const f64, len: usize, out: *mut f64) -> CbfStatus {
    guard(|| {
        let v = slice_arg(values, len, "values")?;
        *out_arg(out, "out")? = cbf_transit::geometry::softmin(v)?;
        Ok(())
    })
}

/// Minimum-norm `u` in `R^dim` with `a_i . u >= b_i` for every row and
/// `|u_j| <= bound`. `a` holds `rows * dim` values row-major; `u` receives
/// `dim` values. Returns [`CbfStatus::Infeasible`] when no such `u` exists.
///
/// # Safety
/// `a` must be valid for `rows * dim` reads, `b` for `rows` reads and `u`
/// for `dim` writes.
#[no_mangle]
pub unsafe extern "C" fn cbf_qp_solve(
    dim: usize,
    bound: f64,
    a: *const f64,
    b: *const f64,
    rows: usize,
    u: *mut f64,
) -> CbfStatus {
    guard(|| {
        let len = rows
            .checked_mul(dim)
            .ok_or_else(|| fail(CbfStatus::InvalidArgument, "rows * dim overflows"))?;
        let a = slice_arg(a, len, "a")?;
        let b = slice_arg(b, rows, "b")?;
        if u.is_null() {
            return Err(fail(CbfStatus::NullPointer, "u is null"));
        }
        let mut p = QpProblem::new(dim, bound);
        if dim > 0 {
            for (i, (row, bi)) in a.chunks(dim).zip(b).enumerate() {
                p.constraints.push(HalfplaneConstraint::new(row.to_vec(), *bi, format!("row{i}")));
            }
        }
        let sol = solve_min_norm(&p)?;
        std::ptr::copy_nonoverlapping(sol.u.as_ptr(), u, dim);
        Ok(())
    })
}
