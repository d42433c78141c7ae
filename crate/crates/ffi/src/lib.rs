//! C interface. Handles are opaque; every call returns a [`WpcStatus`] and the
//! message of the last failure on the calling thread is kept for
//! [`wpc_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wp_curvature::config::{RunConfig, Stage};
use wp_curvature::pipeline::{execute, RunOutcome};
use wp_curvature::surrogate::run_suite;
use wp_curvature::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WpcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    BufferTooSmall = 6,
    NotAvailable = 7,
    Panic = 8,
}

/// Run configuration handle.
pub struct WpcConfig {
    inner: RunConfig,
}

/// Completed run handle.
pub struct WpcRun {
    inner: RunOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> WpcStatus {
    match e {
        Error::Stage { source, .. } => status_of(source),
        Error::Config(_) | Error::UnsupportedGenus(_) => WpcStatus::Config,
        Error::InvalidParameter(_) | Error::DimensionMismatch { .. } => WpcStatus::InvalidArgument,
        Error::Io(_) | Error::Json(_) => WpcStatus::Io,
        _ => WpcStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (WpcStatus, String)>) -> WpcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            WpcStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            WpcStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (WpcStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (WpcStatus, String) {
    (WpcStatus::NullPointer, format!("{name} is null"))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, (WpcStatus, String)> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, (WpcStatus, String)> {
    p.as_mut().ok_or_else(|| null(name))
}

/// Message for the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn wpc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wpc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default configuration.
///
/// # Safety
/// `out` must be a valid pointer; the handle is released with [`wpc_config_free`].
#[no_mangle]
pub unsafe extern "C" fn wpc_config_new(out: *mut *mut WpcConfig) -> WpcStatus {
    guard(|| {
        let slot = deref_mut(out, "out")?;
        *slot = Box::into_raw(Box::new(WpcConfig { inner: RunConfig::default() }));
        Ok(())
    })
}

/// Configuration parsed from TOML text; unknown keys are rejected.
///
/// # Safety
/// `toml` must be NUL-terminated UTF-8 and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wpc_config_from_toml(toml: *const c_char, out: *mut *mut WpcConfig) -> WpcStatus {
    guard(|| {
        if toml.is_null() {
            return Err(null("toml"));
        }
        let slot = deref_mut(out, "out")?;
        let text = CStr::from_ptr(toml).to_str().map_err(|e| (WpcStatus::InvalidArgument, e.to_string()))?;
        let cfg = RunConfig::from_toml(text).map_err(lib_err)?;
        cfg.validate().map_err(lib_err)?;
        *slot = Box::into_raw(Box::new(WpcConfig { inner: cfg }));
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn wpc_config_free(cfg: *mut WpcConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn wpc_config_set_mesh_level(cfg: *mut WpcConfig, level: u32) -> WpcStatus {
    guard(|| {
        deref_mut(cfg, "cfg")?.inner.mesh_level = level;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn wpc_config_set_tau_rel(cfg: *mut WpcConfig, tau_rel: f64) -> WpcStatus {
    guard(|| {
        deref_mut(cfg, "cfg")?.inner.tau_rel = tau_rel;
        Ok(())
    })
}

/// Last stage to run, by name (`"spectrum"`, `"checks"`, ...). Null clears the limit.
///
/// # Safety
/// `cfg` must be a live handle; `stage` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wpc_config_set_stage(cfg: *mut WpcConfig, stage: *const c_char) -> WpcStatus {
    guard(|| {
        let cfg = deref_mut(cfg, "cfg")?;
        cfg.inner.stage = if stage.is_null() {
            None
        } else {
            let name = CStr::from_ptr(stage).to_str().map_err(|e| (WpcStatus::InvalidArgument, e.to_string()))?;
            Some(name.parse::<Stage>().map_err(lib_err)?)
        };
        Ok(())
    })
}

/// Runs the pipeline in memory; no files are written.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer; release the run with [`wpc_run_free`].
#[no_mangle]
pub unsafe extern "C" fn wpc_run(cfg: *const WpcConfig, out: *mut *mut WpcRun) -> WpcStatus {
    guard(|| {
        let cfg = deref(cfg, "cfg")?;
        let slot = deref_mut(out, "out")?;
        let run = execute(&cfg.inner, None).map_err(lib_err)?;
        *slot = Box::into_raw(Box::new(WpcRun { inner: run }));
        Ok(())
    })
}

/// # Safety
/// `run` must come from [`wpc_run`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn wpc_run_free(run: *mut WpcRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// 1 when no report entry failed, 0 otherwise.
///
/// # Safety
/// `run` must be a live handle and `passed` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wpc_run_all_passed(run: *const WpcRun, passed: *mut i32) -> WpcStatus {
    guard(|| {
        let run = deref(run, "run")?;
        *deref_mut(passed, "passed")? = i32::from(run.inner.report.all_passed());
        Ok(())
    })
}

/// Copies the ascending spectrum of the curvature operator.
///
/// `len` receives the eigenvalue count. With a null `values` only the count is written;
/// otherwise `capacity` must cover it.
///
/// # Safety
/// `run` live, `len` valid, `values` null or writable for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn wpc_run_spectrum(run: *const WpcRun, values: *mut f64, capacity: usize, len: *mut usize) -> WpcStatus {
    guard(|| {
        let run = deref(run, "run")?;
        let len = deref_mut(len, "len")?;
        let spec = run
            .inner
            .spectrum
            .as_ref()
            .ok_or((WpcStatus::NotAvailable, "spectrum stage was not run".to_string()))?;
        *len = spec.eigenvalues.len();
        if values.is_null() {
            return Ok(());
        }
        if capacity < spec.eigenvalues.len() {
            return Err((WpcStatus::BufferTooSmall, format!("need {} values, have {capacity}", spec.eigenvalues.len())));
        }
        ptr::copy_nonoverlapping(spec.eigenvalues.as_ptr(), values, spec.eigenvalues.len());
        Ok(())
    })
}

/// Verification report as JSON. Release with [`wpc_string_free`].
///
/// # Safety
/// `run` live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn wpc_run_report_json(run: *const WpcRun, out: *mut *mut c_char) -> WpcStatus {
    guard(|| {
        let run = deref(run, "run")?;
        let slot = deref_mut(out, "out")?;
        let text = serde_json::to_string(&run.inner.report).map_err(|e| (WpcStatus::Io, e.to_string()))?;
        *slot = CString::new(text).map_err(|e| (WpcStatus::Io, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn wpc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Synthetic-kernel suite over seeds `0..seeds` at dimension `n`; `passed` is 1 when every seed passes.
///
/// # Safety
/// `passed` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wpc_surrogate_suite(seeds: u64, n: usize, num_points: usize, tau_rel: f64, passed: *mut i32) -> WpcStatus {
    guard(|| {
        let slot = deref_mut(passed, "passed")?;
        if seeds == 0 || n == 0 || tau_rel.is_nan() || tau_rel <= 0.0 {
            return Err((WpcStatus::InvalidArgument, "seeds, n and tau_rel must be positive".into()));
        }
        *slot = i32::from(run_suite(seeds, &[n], num_points, tau_rel, "").all_passed);
        Ok(())
    })
}
