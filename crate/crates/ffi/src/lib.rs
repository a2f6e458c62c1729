//! C ABI over the `divload` engine.
//!
//! Networks, profiles and schedules are opaque handles created by `*_new`
//! or solver calls and released with the matching `*_free`. Every fallible
//! call returns a [`DivloadStatus`]; on failure a description is available
//! from [`divload_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use divload::{
    classic::solve_time_invariant, deterministic::solve, oracle::replay_oracle, ControlMode, Error,
    NetworkSpec, Schedule, SolveMode, SolverOptions, SpeedProfiles, StepProfile,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivloadStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidProfile = 3,
    InvalidSpec = 4,
    Infeasible = 5,
    NoBracket = 6,
    NonMonotone = 7,
    BufferTooSmall = 8,
    Panic = 99,
}

/// Search strategy of the recursive solver.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivloadMode {
    Bisection = 0,
    SweepDown = 1,
}

/// Network description: base speeds, load constants and control mode.
pub struct DivloadNetwork(NetworkSpec);

/// Piecewise-constant inverse-speed profile.
pub struct DivloadProfile(StepProfile);

/// Load fractions, stage times and finishing time.
pub struct DivloadSchedule(Schedule);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("NULs were removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DivloadStatus {
    match e {
        Error::InvalidProfile(_) | Error::InvalidTrace(_) | Error::InvalidInterval { .. } => {
            DivloadStatus::InvalidProfile
        }
        Error::InvalidSpec(_) => DivloadStatus::InvalidSpec,
        Error::Infeasible { .. } => DivloadStatus::Infeasible,
        Error::NoBracket { .. } => DivloadStatus::NoBracket,
        Error::NonMonotone { .. } => DivloadStatus::NonMonotone,
        _ => DivloadStatus::InvalidArgument,
    }
}

fn fail(status: DivloadStatus, message: impl Into<String>) -> DivloadStatus {
    set_last_error(message.into());
    status
}

/// Runs `body`, turning errors and panics into status codes.
fn guarded(body: impl FnOnce() -> Result<(), (DivloadStatus, String)>) -> DivloadStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => DivloadStatus::Ok,
        Ok(Err((status, message))) => fail(status, message),
        Err(_) => fail(DivloadStatus::Panic, "internal panic"),
    }
}

fn lift(e: Error) -> (DivloadStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (DivloadStatus, String) {
    (DivloadStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `data` must be null only when `len` is 0, and otherwise point to `len` doubles.
unsafe fn doubles<'a>(
    data: *const f64,
    len: usize,
    what: &str,
) -> Result<&'a [f64], (DivloadStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

/// # Safety
/// `items` must point to `len` valid profile handles (or be null when `len` is 0).
unsafe fn profiles(
    items: *const *const DivloadProfile,
    len: usize,
    what: &str,
) -> Result<Vec<StepProfile>, (DivloadStatus, String)> {
    if len == 0 {
        return Ok(Vec::new());
    }
    if items.is_null() {
        return Err(null(what));
    }
    std::slice::from_raw_parts(items, len)
        .iter()
        .map(|&p| p.as_ref().map(|p| p.0.clone()).ok_or_else(|| null(what)))
        .collect()
}

/// Description of the last failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn divload_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a network with `n_w = N + 1` computing and `n_z = N` link
/// inverse speeds. `time_varying_control` nonzero lets `P_0` and the links
/// vary over time.
///
/// # Safety
/// `base_w` and `base_z` must point to `n_w` and `n_z` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn divload_network_new(
    base_w: *const f64,
    n_w: usize,
    base_z: *const f64,
    n_z: usize,
    t_cp: f64,
    t_cm: f64,
    time_varying_control: i32,
    out: *mut *mut DivloadNetwork,
) -> DivloadStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let w = doubles(base_w, n_w, "base_w")?.to_vec();
        let z = doubles(base_z, n_z, "base_z")?.to_vec();
        let mode = if time_varying_control != 0 {
            ControlMode::TimeVaryingControl
        } else {
            ControlMode::TimeInvariantControl
        };
        let spec = NetworkSpec::new(w, z, t_cp, t_cm, mode).map_err(lift)?;
        *out = Box::into_raw(Box::new(DivloadNetwork(spec)));
        Ok(())
    })
}

/// # Safety
/// `network` must come from [`divload_network_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn divload_network_free(network: *mut DivloadNetwork) {
    if !network.is_null() {
        drop(Box::from_raw(network));
    }
}

/// Creates a profile taking `values[k]` on `[breakpoints[k], breakpoints[k + 1])`.
///
/// # Safety
/// `breakpoints` and `values` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn divload_profile_new(
    breakpoints: *const f64,
    values: *const f64,
    len: usize,
    out: *mut *mut DivloadProfile,
) -> DivloadStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let b = doubles(breakpoints, len, "breakpoints")?.to_vec();
        let v = doubles(values, len, "values")?.to_vec();
        let p = StepProfile::new(b, v).map_err(lift)?;
        *out = Box::into_raw(Box::new(DivloadProfile(p)));
        Ok(())
    })
}

/// # Safety
/// `profile` must come from [`divload_profile_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn divload_profile_free(profile: *mut DivloadProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Equivalent constant inverse speed of `profile` over `[start, end]`.
///
/// # Safety
/// `profile` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn divload_profile_equivalent(
    profile: *const DivloadProfile,
    start: f64,
    end: f64,
    out: *mut f64,
) -> DivloadStatus {
    guarded(|| {
        let p = profile.as_ref().ok_or_else(|| null("profile"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = p.0.equivalent(start, end).map_err(lift)?;
        Ok(())
    })
}

/// Closed-form schedule at the network's base speeds.
///
/// # Safety
/// `network` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn divload_solve_time_invariant(
    network: *const DivloadNetwork,
    out: *mut *mut DivloadSchedule,
) -> DivloadStatus {
    guarded(|| {
        let net = network.as_ref().ok_or_else(|| null("network"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(DivloadSchedule(solve_time_invariant(&net.0))));
        Ok(())
    })
}

/// Recursive solve with time-varying profiles: `w` holds `N + 1` computing
/// profiles and `z` holds `N` link profiles. Under a time-invariant control
/// processor `w[0]` and every `z` must be constant.
///
/// # Safety
/// `network` must be live, `w` and `z` must point to `n_w` and `n_z` live
/// profile handles, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn divload_solve(
    network: *const DivloadNetwork,
    w: *const *const DivloadProfile,
    n_w: usize,
    z: *const *const DivloadProfile,
    n_z: usize,
    mode: DivloadMode,
    out: *mut *mut DivloadSchedule,
) -> DivloadStatus {
    guarded(|| {
        let net = network.as_ref().ok_or_else(|| null("network"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let profiles = SpeedProfiles::new(&net.0, profiles(w, n_w, "w")?, profiles(z, n_z, "z")?)
            .map_err(lift)?;
        let opts = SolverOptions {
            mode: match mode {
                DivloadMode::Bisection => SolveMode::Bisection,
                DivloadMode::SweepDown => SolveMode::SweepDown,
            },
            ..SolverOptions::default()
        };
        let report = solve(&net.0, &profiles, &opts).map_err(lift)?;
        *out = Box::into_raw(Box::new(DivloadSchedule(report.schedule)));
        Ok(())
    })
}

/// Largest per-processor residual of a slot-level replay of `schedule`.
///
/// # Safety
/// Same handle rules as [`divload_solve`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn divload_replay_residual(
    schedule: *const DivloadSchedule,
    network: *const DivloadNetwork,
    w: *const *const DivloadProfile,
    n_w: usize,
    z: *const *const DivloadProfile,
    n_z: usize,
    slot: f64,
    out: *mut f64,
) -> DivloadStatus {
    guarded(|| {
        let s = schedule.as_ref().ok_or_else(|| null("schedule"))?;
        let net = network.as_ref().ok_or_else(|| null("network"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let profiles = SpeedProfiles::new(&net.0, profiles(w, n_w, "w")?, profiles(z, n_z, "z")?)
            .map_err(lift)?;
        *out = replay_oracle(&s.0, &net.0, &profiles, slot)
            .map_err(lift)?
            .max_residual();
        Ok(())
    })
}

/// # Safety
/// `schedule` must come from a solver call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn divload_schedule_free(schedule: *mut DivloadSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// Finishing time, or NaN for a null handle.
///
/// # Safety
/// `schedule` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn divload_schedule_finish_time(schedule: *const DivloadSchedule) -> f64 {
    schedule.as_ref().map_or(f64::NAN, |s| s.0.finish_time)
}

/// Number of processors `N + 1`, or 0 for a null handle.
///
/// # Safety
/// `schedule` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn divload_schedule_processor_count(
    schedule: *const DivloadSchedule,
) -> usize {
    schedule.as_ref().map_or(0, |s| s.0.fractions.len())
}

/// # Safety
/// `out` must point to `len` writable doubles.
unsafe fn copy_out(
    values: &[f64],
    out: *mut f64,
    len: usize,
) -> Result<(), (DivloadStatus, String)> {
    if len < values.len() {
        return Err((
            DivloadStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", values.len()),
        ));
    }
    if !values.is_empty() {
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    }
    Ok(())
}

/// Copies the `N + 1` load fractions into `out`.
///
/// # Safety
/// `schedule` must be live and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn divload_schedule_fractions(
    schedule: *const DivloadSchedule,
    out: *mut f64,
    len: usize,
) -> DivloadStatus {
    guarded(|| {
        let s = schedule.as_ref().ok_or_else(|| null("schedule"))?;
        copy_out(&s.0.fractions, out, len)
    })
}

/// Copies the `N` stage times (end of each worker's communication) into `out`.
///
/// # Safety
/// `schedule` must be live and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn divload_schedule_stage_times(
    schedule: *const DivloadSchedule,
    out: *mut f64,
    len: usize,
) -> DivloadStatus {
    guarded(|| {
        let s = schedule.as_ref().ok_or_else(|| null("schedule"))?;
        copy_out(&s.0.stage_times, out, len)
    })
}
