//! C interface to `opdilate`. Instances and results are opaque handles;
//! every fallible call returns an [`OpdStatus`] and leaves a message for
//! [`opd_last_error_message`] on failure.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use opdilate::cli::json::ResultFile;
use opdilate::cli::{self, Failure, LoadedInstance, Options, Status};
use opdilate::numkernel::{min_eigenvalue, psd_check, ComplexMatrix, TolerancePolicy};
use opdilate::Complex64;

/// Status codes. The first four match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpdStatus {
    Ok = 0,
    NotPositive = 1,
    Malformed = 2,
    ResidualExceeded = 3,
    NullPointer = 4,
    Internal = 5,
}

impl From<Status> for OpdStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Ok => OpdStatus::Ok,
            Status::Negative => OpdStatus::NotPositive,
            Status::Malformed => OpdStatus::Malformed,
            Status::ResidualExceeded => OpdStatus::ResidualExceeded,
        }
    }
}

/// Parsed instance file.
pub struct OpdInstance(LoadedInstance);

/// Result of `check` or `dilate`.
pub struct OpdResult(ResultFile);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<OpdStatus, (OpdStatus, String)>) -> OpdStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            OpdStatus::Internal
        }
    }
}

fn failure(f: Failure) -> (OpdStatus, String) {
    (f.status.into(), f.message)
}

fn null(what: &str) -> (OpdStatus, String) {
    (OpdStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `data` must point to `len` readable bytes.
unsafe fn bytes<'a>(data: *const c_char, len: usize) -> &'a [u8] {
    std::slice::from_raw_parts(data.cast::<u8>(), len)
}

fn options(tol: f64, seed: u64) -> Options {
    Options {
        tol: (tol.is_finite() && tol > 0.0).then_some(tol),
        seed,
        ..Options::default()
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn opd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Toolkit version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn opd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses an instance file held in memory.
///
/// # Safety
/// `json` must point to `len` readable bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opd_instance_from_json(json: *const c_char, len: usize, out: *mut *mut OpdInstance) -> OpdStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let inst = cli::parse_instance(bytes(json, len)).map_err(failure)?;
        *out = Box::into_raw(Box::new(OpdInstance(inst)));
        Ok(OpdStatus::Ok)
    })
}

/// # Safety
/// `inst` must come from [`opd_instance_from_json`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn opd_instance_free(inst: *mut OpdInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

unsafe fn run(
    inst: *const OpdInstance,
    out: *mut *mut OpdResult,
    f: impl FnOnce(&LoadedInstance) -> Result<ResultFile, Failure>,
) -> OpdStatus {
    guard(|| {
        if inst.is_null() {
            return Err(null("instance"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let result = f(&(*inst).0).map_err(failure)?;
        let status = cli::status_of(&result).into();
        *out = Box::into_raw(Box::new(OpdResult(result)));
        Ok(status)
    })
}

/// Positivity check. Returns `OPD_STATUS_OK` or `OPD_STATUS_NOT_POSITIVE`
/// and stores the report in `out` in both cases.
///
/// # Safety
/// `inst` must be a live instance handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opd_check(inst: *const OpdInstance, seed: u64, out: *mut *mut OpdResult) -> OpdStatus {
    run(inst, out, |i| cli::check(i, &options(0.0, seed)))
}

/// Minimal decomposition or dilation. A non-positive `tol` keeps the
/// instance's residual tolerance. On `OPD_STATUS_RESIDUAL_EXCEEDED` the
/// result is still stored in `out`.
///
/// # Safety
/// `inst` must be a live instance handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opd_dilate(inst: *const OpdInstance, tol: f64, seed: u64, out: *mut *mut OpdResult) -> OpdStatus {
    run(inst, out, |i| cli::dilate(i, &options(tol, seed)))
}

/// Re-verifies a serialized result against `inst`.
///
/// # Safety
/// `inst` must be a live instance handle; `json` must point to `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn opd_verify(inst: *const OpdInstance, json: *const c_char, len: usize) -> OpdStatus {
    guard(|| {
        if inst.is_null() {
            return Err(null("instance"));
        }
        if json.is_null() {
            return Err(null("json"));
        }
        let stored: ResultFile = serde_json::from_slice(bytes(json, len))
            .map_err(|e| (OpdStatus::Malformed, format!("invalid result file: {e}")))?;
        let report = cli::verify(&(*inst).0, &stored).map_err(failure)?;
        match report.status() {
            Status::Ok => Ok(OpdStatus::Ok),
            s => Err((s.into(), format!("failing clauses: {}", report.failing().join(", ")))),
        }
    })
}

/// # Safety
/// `result` must be a live result handle or null.
#[no_mangle]
pub unsafe extern "C" fn opd_result_passed(result: *const OpdResult) -> bool {
    !result.is_null() && (*result).0.passed
}

/// Copies up to `cap` module ranks into `ranks` and returns how many
/// ranks the result has.
///
/// # Safety
/// `result` must be a live result handle; `ranks` must hold `cap` entries
/// or be null with `cap = 0`.
#[no_mangle]
pub unsafe extern "C" fn opd_result_ranks(result: *const OpdResult, ranks: *mut usize, cap: usize) -> usize {
    if result.is_null() {
        return 0;
    }
    let r = &(*result).0.ranks;
    if !ranks.is_null() {
        for (i, v) in r.iter().take(cap).enumerate() {
            *ranks.add(i) = *v;
        }
    }
    r.len()
}

/// Result file as JSON; release with [`opd_string_free`].
///
/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn opd_result_to_json(result: *const OpdResult) -> *mut c_char {
    if result.is_null() {
        set_error("result is null");
        return ptr::null_mut();
    }
    match CString::new(cli::to_json(&(*result).0)) {
        Ok(s) => s.into_raw(),
        Err(_) => ptr::null_mut(),
    }
}

/// # Safety
/// `result` must come from [`opd_check`] or [`opd_dilate`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn opd_result_free(result: *mut OpdResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// # Safety
/// `s` must come from [`opd_result_to_json`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn opd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Positive-semidefiniteness of an `n × n` Hermitian matrix given as
/// `2·n·n` interleaved row-major `(re, im)` doubles, with default
/// tolerances. The smallest eigenvalue goes to `min_eig` if not null.
///
/// # Safety
/// `data` must hold `2·n·n` doubles; `is_psd` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opd_psd_check(data: *const f64, n: usize, is_psd: *mut bool, min_eig: *mut f64) -> OpdStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        if is_psd.is_null() {
            return Err(null("is_psd"));
        }
        let raw = std::slice::from_raw_parts(data, 2 * n * n);
        let values = raw.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
        let m = ComplexMatrix::new(n, n, values).map_err(|e| (OpdStatus::Malformed, e.to_string()))?;
        let tol = TolerancePolicy::default();
        let positive = psd_check(&m, &tol).map_err(|e| failure(e.into()))?;
        *is_psd = positive;
        if !min_eig.is_null() {
            *min_eig = min_eigenvalue(&m, &tol).map_err(|e| failure(e.into()))?;
        }
        Ok(OpdStatus::Ok)
    })
}
