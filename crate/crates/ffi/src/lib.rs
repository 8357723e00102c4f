//! C interface to `abpkit`.
//!
//! Every fallible function returns an [`AbpStatus`]. On failure the message is
//! kept per thread and can be read with [`abp_last_error`]. Models are opaque
//! [`AbpModel`] handles released with [`abp_model_free`]; strings returned
//! through out-parameters are released with [`abp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use abpkit::harness::config::ManifoldSpec;
use abpkit::harness::{convergence_batch, emit_convergence, emit_report, run_batch, ExperimentConfig, ReportFormat, RunKind};
use abpkit::models::{ball_volume, unit_ball_volume};
use abpkit::{Error, WarpedModel};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Config = 4,
    ProfileRejected = 5,
    Numerical = 6,
    Unsupported = 7,
    Io = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbpRunKind {
    Sobolev = 0,
    MichaelSimon = 1,
    Transport = 2,
    Convergence = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbpFormat {
    Csv = 0,
    Json = 1,
}

/// Opaque handle to a certified model manifold.
pub struct AbpModel {
    inner: WarpedModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AbpStatus {
    match e {
        Error::InvalidArgument(_) | Error::GridMismatch(_) | Error::NotInU { .. } => AbpStatus::InvalidArgument,
        Error::Config(_) | Error::Parse { .. } => AbpStatus::Config,
        Error::ProfileRejected(_) | Error::ConePoint { .. } => AbpStatus::ProfileRejected,
        Error::Unsupported(_) | Error::CodimensionTooLow(_) => AbpStatus::Unsupported,
        Error::Io { .. } => AbpStatus::Io,
        _ => AbpStatus::Numerical,
    }
}

struct Failure(AbpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AbpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AbpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            AbpStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(AbpStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(AbpStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: callers promise a writable location when non-null.
    unsafe { p.as_mut() }.ok_or_else(|| Failure(AbpStatus::NullPointer, format!("{what} is null")))
}

fn model_ref<'a>(m: *const AbpModel) -> Result<&'a AbpModel, Failure> {
    // SAFETY: non-null handles come from `abp_model_*` constructors.
    unsafe { m.as_ref() }.ok_or_else(|| Failure(AbpStatus::NullPointer, "model is null".into()))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn abp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Volume of the Euclidean unit ball in dimension `k`.
#[no_mangle]
pub extern "C" fn abp_unit_ball_volume(k: usize) -> f64 {
    unit_ball_volume(k)
}

/// Flat model of dimension `dim`.
#[no_mangle]
pub extern "C" fn abp_model_euclidean(dim: usize, out: *mut *mut AbpModel) -> AbpStatus {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        if dim < 2 {
            return Err(Failure(AbpStatus::InvalidArgument, format!("dimension must be at least 2, got {dim}")));
        }
        *slot = Box::into_raw(Box::new(AbpModel {
            inner: WarpedModel::euclidean(dim),
        }));
        Ok(())
    })
}

/// Builds a model from a TOML table in the same form as `[case.manifold]`,
/// for example `preset = "cone_smoothed"\nalpha = 0.5\ndim = 3`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn abp_model_from_toml(spec: *const c_char, out: *mut *mut AbpModel) -> AbpStatus {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let text = read_str(spec, "spec")?;
        let spec: ManifoldSpec =
            toml::from_str(text).map_err(|e| Failure(AbpStatus::Config, format!("manifold spec: {e}")))?;
        *slot = Box::into_raw(Box::new(AbpModel { inner: spec.build()? }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn abp_model_free(model: *mut AbpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

#[no_mangle]
pub extern "C" fn abp_model_dim(model: *const AbpModel, out: *mut usize) -> AbpStatus {
    guard(|| {
        *out_ptr(out, "out")? = model_ref(model)?.inner.dim;
        Ok(())
    })
}

/// Asymptotic volume ratio of the model.
#[no_mangle]
pub extern "C" fn abp_model_theta(model: *const AbpModel, out: *mut f64) -> AbpStatus {
    guard(|| {
        *out_ptr(out, "out")? = model_ref(model)?.inner.theta;
        Ok(())
    })
}

/// Warping function at radius `r`.
#[no_mangle]
pub extern "C" fn abp_model_phi(model: *const AbpModel, r: f64, out: *mut f64) -> AbpStatus {
    guard(|| {
        let m = model_ref(model)?;
        if !(r >= 0.0) {
            return Err(Failure(AbpStatus::InvalidArgument, format!("radius {r} is not nonnegative")));
        }
        *out_ptr(out, "out")? = m.inner.phi(r);
        Ok(())
    })
}

/// Volume of the geodesic ball of radius `r` about the pole.
#[no_mangle]
pub extern "C" fn abp_model_ball_volume(model: *const AbpModel, r: f64, out: *mut f64) -> AbpStatus {
    guard(|| {
        let m = model_ref(model)?;
        *out_ptr(out, "out")? = ball_volume(&m.inner, r)?;
        Ok(())
    })
}

/// Runs an experiment config given as TOML text and returns the report.
/// Relative paths in the config resolve against the working directory.
/// `*failed_rows` receives the number of rows with status `fail` (or failed
/// convergence tables) and may be null. Release `*report` with
/// [`abp_string_free`].
///
/// # Safety
/// `config` must be a NUL-terminated string and `report` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn abp_run_config(
    config: *const c_char,
    kind: AbpRunKind,
    format: AbpFormat,
    report: *mut *mut c_char,
    failed_rows: *mut usize,
) -> AbpStatus {
    guard(|| {
        let slot = out_ptr(report, "report")?;
        *slot = ptr::null_mut();
        let cfg = ExperimentConfig::parse(read_str(config, "config")?, "<config>")?;
        let fmt = match format {
            AbpFormat::Csv => ReportFormat::Csv,
            AbpFormat::Json => ReportFormat::Json,
        };
        let (text, failed) = match kind {
            AbpRunKind::Convergence => {
                let tables = convergence_batch(&cfg, 3);
                let failed = tables
                    .iter()
                    .filter(|t| t.status == abpkit::harness::report::ConvergenceStatus::Fail)
                    .count();
                (emit_convergence(&tables, fmt)?, failed)
            }
            other => {
                let rk = match other {
                    AbpRunKind::Sobolev => RunKind::Sobolev,
                    AbpRunKind::MichaelSimon => RunKind::MichaelSimon,
                    _ => RunKind::Transport,
                };
                let rows = run_batch(&cfg, rk);
                let failed = rows
                    .iter()
                    .filter(|r| r.status == abpkit::harness::RowStatus::Fail)
                    .count();
                (emit_report(&rows, fmt)?, failed)
            }
        };
        if !failed_rows.is_null() {
            *failed_rows = failed;
        }
        *slot = CString::new(text)
            .map_err(|_| Failure(AbpStatus::Numerical, "report contains NUL".into()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn abp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
