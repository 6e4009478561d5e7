//! C ABI for `tplcov`.
//!
//! Every fallible function returns a [`TplcovStatus`]; on failure a message
//! is available from [`tplcov_last_error`] on the same thread. Handles are
//! opaque and must be released with the matching `_free` function. Matrices
//! cross the boundary as dense row-major `double` arrays.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tplcov::sim::{generate, sample_mvn};
use tplcov::{
    chisq1_quantile, tpl_estimate, CovSpec, DataMatrix, EstimateConfig, Penalty, SeedStream, Structure,
    SymMatrix, TplError, TplFit,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TplcovStatus {
    Ok = 0,
    ArgumentError = 1,
    DataError = 2,
    DomainError = 3,
    NumericError = 4,
    NotConverged = 5,
    GenerationError = 6,
    NullPointer = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Covariance pattern for [`tplcov_simulate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TplcovStructure {
    BlockDiagonal = 0,
    SparseRandom = 1,
}

/// An `n x p` data matrix.
pub struct TplcovData {
    inner: DataMatrix,
}

/// A fitted sparse covariance estimate.
pub struct TplcovFit {
    inner: TplFit,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &TplError) -> TplcovStatus {
    match e {
        TplError::Argument(_) => TplcovStatus::ArgumentError,
        TplError::Data(_) => TplcovStatus::DataError,
        TplError::Domain(_) => TplcovStatus::DomainError,
        TplError::Numeric(_) => TplcovStatus::NumericError,
        TplError::NotConverged { .. } => TplcovStatus::NotConverged,
        TplError::Generation(_) => TplcovStatus::GenerationError,
    }
}

/// Run `f`, turning errors and panics into status codes.
fn guard<F>(f: F) -> TplcovStatus
where
    F: FnOnce() -> Result<(), TplcovStatus>,
{
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TplcovStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            TplcovStatus::Panic
        }
    }
}

fn fail(e: TplError) -> TplcovStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null(what: &str) -> TplcovStatus {
    set_error(format!("{what} is null"));
    TplcovStatus::NullPointer
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, TplcovStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &str) -> Result<(), TplcovStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

fn copy_dense(theta: &SymMatrix, buf: *mut f64, len: usize) -> Result<(), TplcovStatus> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    let p = theta.p();
    if len < p * p {
        set_error(format!("buffer holds {len} values, need {}", p * p));
        return Err(TplcovStatus::BufferTooSmall);
    }
    let out = unsafe { std::slice::from_raw_parts_mut(buf, p * p) };
    for j in 0..p {
        for k in 0..p {
            out[j * p + k] = theta.get(j, k);
        }
    }
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn tplcov_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tplcov_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy `n * p` row-major values into a new data handle.
#[no_mangle]
pub unsafe extern "C" fn tplcov_data_new(
    values: *const f64,
    n: usize,
    p: usize,
    out: *mut *mut TplcovData,
) -> TplcovStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let len = n.checked_mul(p).ok_or_else(|| fail(TplError::Argument("n * p overflows".into())))?;
        let slice = std::slice::from_raw_parts(values, len);
        let inner = DataMatrix::new(n, p, slice.to_vec()).map_err(fail)?;
        out.write(Box::into_raw(Box::new(TplcovData { inner })));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tplcov_data_free(data: *mut TplcovData) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

#[no_mangle]
pub unsafe extern "C" fn tplcov_data_dims(data: *const TplcovData, n: *mut usize, p: *mut usize) -> TplcovStatus {
    guard(|| {
        let d = &as_ref(data, "data")?.inner;
        write_out(n, d.n(), "n")?;
        write_out(p, d.p(), "p")
    })
}

/// Copy the data values, row-major, into `buf` of length at least `n * p`.
#[no_mangle]
pub unsafe extern "C" fn tplcov_data_values(data: *const TplcovData, buf: *mut f64, len: usize) -> TplcovStatus {
    guard(|| {
        let d = &as_ref(data, "data")?.inner;
        if buf.is_null() {
            return Err(null("buffer"));
        }
        let values = d.values();
        if len < values.len() {
            set_error(format!("buffer holds {len} values, need {}", values.len()));
            return Err(TplcovStatus::BufferTooSmall);
        }
        std::slice::from_raw_parts_mut(buf, values.len()).copy_from_slice(values);
        Ok(())
    })
}

unsafe fn estimate(
    data: *const TplcovData,
    penalty: Penalty,
    center: bool,
    out: *mut *mut TplcovFit,
) -> TplcovStatus {
    guard(|| {
        let d = &as_ref(data, "data")?.inner;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = EstimateConfig {
            center,
            ..EstimateConfig::default()
        };
        let inner = tpl_estimate(d, penalty, &cfg).map_err(fail)?;
        out.write(Box::into_raw(Box::new(TplcovFit { inner })));
        Ok(())
    })
}

/// Fit with the penalty chosen by the chi-square rule at level `alpha`.
#[no_mangle]
pub unsafe extern "C" fn tplcov_estimate_alpha(
    data: *const TplcovData,
    alpha: f64,
    center: bool,
    out: *mut *mut TplcovFit,
) -> TplcovStatus {
    estimate(data, Penalty::Alpha(alpha), center, out)
}

/// Fit at a fixed penalty `lambda`.
#[no_mangle]
pub unsafe extern "C" fn tplcov_estimate_lambda(
    data: *const TplcovData,
    lambda: f64,
    center: bool,
    out: *mut *mut TplcovFit,
) -> TplcovStatus {
    estimate(data, Penalty::Lambda(lambda), center, out)
}

#[no_mangle]
pub unsafe extern "C" fn tplcov_fit_free(fit: *mut TplcovFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Dimension `p` of the estimate, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn tplcov_fit_dim(fit: *const TplcovFit) -> usize {
    fit.as_ref().map_or(0, |f| f.inner.theta_hat.p())
}

/// Copy the `p x p` estimate, row-major, into `buf`.
#[no_mangle]
pub unsafe extern "C" fn tplcov_fit_theta(fit: *const TplcovFit, buf: *mut f64, len: usize) -> TplcovStatus {
    guard(|| copy_dense(&as_ref(fit, "fit")?.inner.theta_hat, buf, len))
}

#[no_mangle]
pub unsafe extern "C" fn tplcov_fit_lambda(fit: *const TplcovFit, out: *mut f64) -> TplcovStatus {
    guard(|| write_out(out, as_ref(fit, "fit")?.inner.lambda_hat, "out"))
}

#[no_mangle]
pub unsafe extern "C" fn tplcov_fit_kkt_residual(fit: *const TplcovFit, out: *mut f64) -> TplcovStatus {
    guard(|| write_out(out, as_ref(fit, "fit")?.inner.kkt_residual, "out"))
}

#[no_mangle]
pub unsafe extern "C" fn tplcov_fit_converged(fit: *const TplcovFit, out: *mut bool) -> TplcovStatus {
    guard(|| write_out(out, as_ref(fit, "fit")?.inner.converged, "out"))
}

#[no_mangle]
pub unsafe extern "C" fn tplcov_fit_support_size(fit: *const TplcovFit, out: *mut usize) -> TplcovStatus {
    guard(|| write_out(out, as_ref(fit, "fit")?.inner.support_size(), "out"))
}

/// Write the selected pairs as 1-based `(j, k)` couples, `j < k`, into
/// `buf` of length at least twice the support size.
#[no_mangle]
pub unsafe extern "C" fn tplcov_fit_support(fit: *const TplcovFit, buf: *mut usize, len: usize) -> TplcovStatus {
    guard(|| {
        let support = &as_ref(fit, "fit")?.inner.support;
        if buf.is_null() {
            return Err(null("buffer"));
        }
        if len < 2 * support.len() {
            set_error(format!("buffer holds {len} values, need {}", 2 * support.len()));
            return Err(TplcovStatus::BufferTooSmall);
        }
        let out = std::slice::from_raw_parts_mut(buf, 2 * support.len());
        for (i, &(j, k)) in support.iter().enumerate() {
            out[2 * i] = j + 1;
            out[2 * i + 1] = k + 1;
        }
        Ok(())
    })
}

/// Upper `alpha` quantile of the chi-square distribution with one degree of freedom.
#[no_mangle]
pub unsafe extern "C" fn tplcov_chisq1_quantile(alpha: f64, out: *mut f64) -> TplcovStatus {
    guard(|| {
        let q = chisq1_quantile(alpha).map_err(fail)?;
        write_out(out, q, "out")
    })
}

/// Draw a covariance of the given structure and `n` observations from it.
/// When `theta` is non-null the true covariance is copied into it
/// (row-major, `theta_len >= p * p`).
#[no_mangle]
pub unsafe extern "C" fn tplcov_simulate(
    structure: TplcovStructure,
    p: usize,
    n: usize,
    tau: f64,
    seed: u64,
    data_out: *mut *mut TplcovData,
    theta: *mut f64,
    theta_len: usize,
) -> TplcovStatus {
    guard(|| {
        if data_out.is_null() {
            return Err(null("data_out"));
        }
        let structure = match structure {
            TplcovStructure::BlockDiagonal => Structure::BlockDiagonal,
            TplcovStructure::SparseRandom => Structure::SparseRandom,
        };
        let spec = CovSpec::new(structure, p, tau).map_err(fail)?;
        let mut rng = SeedStream::new(seed).rng();
        let (truth, _) = generate(&spec, &mut rng).map_err(fail)?;
        let data = sample_mvn(&truth, n, &mut rng).map_err(fail)?;
        if !theta.is_null() {
            copy_dense(&truth, theta, theta_len)?;
        }
        data_out.write(Box::into_raw(Box::new(TplcovData { inner: data })));
        Ok(())
    })
}
