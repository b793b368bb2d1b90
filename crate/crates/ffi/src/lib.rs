//! C ABI for domsplit.
//!
//! Objects are opaque handles released by their `_free` function. Every call
//! returns a `DsStatus`; on failure `ds_last_error_message` describes the error
//! on the calling thread.

#![allow(clippy::missing_safety_doc)]

use domsplit::certifier::{certify, CertifierOptions, Verdict};
use domsplit::jacobi::{dist_to_spectrum, greens_column, spectrum, Extension, JacobiOperator, SpectrumApprox};
use domsplit::Error;
use num_complex::Complex64 as C64;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsStatus {
    DsOk = 0,
    DsNullPointer = 1,
    DsInvalidArgument = 2,
    DsRange = 3,
    DsSingular = 4,
    DsIllConditioned = 5,
    DsInternal = 6,
    DsPanic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsExtension {
    DsExtensionPeriodic = 0,
    DsExtensionConstant = 1,
    DsExtensionZero = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsVerdict {
    DsValid = 0,
    DsMarginal = 1,
    DsFailed = 2,
}

/// Certificate summary. Quantities that were not evaluated are NaN, or 0 for `n`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DsCertificate {
    pub verdict: DsVerdict,
    /// Failed condition 1–4, or 0.
    pub condition_failed: i32,
    pub n: u32,
    pub delta_sep: f64,
    pub m_n: f64,
    pub domination_margin: f64,
    pub invariance_residual: f64,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub epsilon: f64,
}

/// Jacobi operator handle.
pub struct DsOperator(JacobiOperator);

/// Spectrum approximation handle.
pub struct DsSpectrum(SpectrumApprox);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> DsStatus {
    match e {
        Error::Range { .. } => DsStatus::DsRange,
        Error::SingularFactor(_) | Error::UndefinedAction | Error::DegenerateCocycle(_) => DsStatus::DsSingular,
        Error::IllConditioned { .. } => DsStatus::DsIllConditioned,
        Error::InternalInconsistency(_) => DsStatus::DsInternal,
        _ => DsStatus::DsInvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (DsStatus, String)>) -> DsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DsStatus::DsOk,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside domsplit");
            DsStatus::DsPanic
        }
    }
}

fn lib_err(e: Error) -> (DsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (DsStatus, String) {
    (DsStatus::DsNullPointer, format!("{name} is null"))
}

/// Message for the last failed call on this thread; empty if none. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ds_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ds_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Operator on `[lo, hi]` from `len = hi − lo + 1` coefficients.
#[no_mangle]
pub unsafe extern "C" fn ds_operator_new(
    lo: i64,
    hi: i64,
    a_re: *const f64,
    a_im: *const f64,
    b: *const f64,
    len: usize,
    extension: DsExtension,
    out: *mut *mut DsOperator,
) -> DsStatus {
    guard(|| {
        if a_re.is_null() || b.is_null() {
            return Err(null("coefficient array"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        if hi < lo || (hi - lo + 1) as u64 != len as u64 {
            return Err((DsStatus::DsInvalidArgument, format!("length {len} does not match window [{lo}, {hi}]")));
        }
        let re = std::slice::from_raw_parts(a_re, len);
        let a: Vec<C64> = if a_im.is_null() {
            re.iter().map(|x| C64::new(*x, 0.0)).collect()
        } else {
            let im = std::slice::from_raw_parts(a_im, len);
            re.iter().zip(im).map(|(x, y)| C64::new(*x, *y)).collect()
        };
        let b = std::slice::from_raw_parts(b, len).to_vec();
        let ext = match extension {
            DsExtension::DsExtensionPeriodic => Extension::Periodic,
            DsExtension::DsExtensionConstant => Extension::Constant,
            DsExtension::DsExtensionZero => Extension::Zero,
        };
        let op = JacobiOperator::new(lo, hi, a, b, ext).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(DsOperator(op)));
        Ok(())
    })
}

/// Operator from its JSON file format.
#[no_mangle]
pub unsafe extern "C" fn ds_operator_from_json(json: *const c_char, out: *mut *mut DsOperator) -> DsStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (DsStatus::DsInvalidArgument, e.to_string()))?;
        let op = JacobiOperator::from_json(text).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(DsOperator(op)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ds_operator_free(op: *mut DsOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

fn opt(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

/// Certify the cocycle of `op` at `E` with default thresholds.
#[no_mangle]
pub unsafe extern "C" fn ds_certify(op: *const DsOperator, e_re: f64, e_im: f64, out: *mut DsCertificate) -> DsStatus {
    guard(|| {
        let op = op.as_ref().ok_or_else(|| null("op"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(e_re.is_finite() && e_im.is_finite()) {
            return Err((DsStatus::DsInvalidArgument, "energy must be finite".into()));
        }
        let cert = certify(&op.0.cocycle_map(C64::new(e_re, e_im)), &CertifierOptions::default());
        *out = DsCertificate {
            verdict: match cert.verdict {
                Verdict::Valid => DsVerdict::DsValid,
                Verdict::Marginal => DsVerdict::DsMarginal,
                Verdict::Failed { .. } => DsVerdict::DsFailed,
            },
            condition_failed: cert.verdict.failed_condition().map_or(0, i32::from),
            n: cert.n.map_or(0, |n| n as u32),
            delta_sep: opt(cert.delta_sep),
            m_n: opt(cert.m_n),
            domination_margin: opt(cert.domination_margin),
            invariance_residual: opt(cert.invariance_residual),
            alpha: opt(cert.alpha),
            alpha_prime: opt(cert.alpha_prime),
            epsilon: opt(cert.epsilon_stability),
        };
        Ok(())
    })
}

/// Spectrum approximation from truncations of the given sizes.
#[no_mangle]
pub unsafe extern "C" fn ds_spectrum(
    op: *const DsOperator,
    sizes: *const usize,
    n_sizes: usize,
    out: *mut *mut DsSpectrum,
) -> DsStatus {
    guard(|| {
        let op = op.as_ref().ok_or_else(|| null("op"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if sizes.is_null() || n_sizes == 0 {
            return Err((DsStatus::DsInvalidArgument, "at least one truncation size is required".into()));
        }
        let sizes = std::slice::from_raw_parts(sizes, n_sizes);
        *out = Box::into_raw(Box::new(DsSpectrum(spectrum(&op.0, sizes))));
        Ok(())
    })
}

/// Number of intervals in the spectral cover.
#[no_mangle]
pub unsafe extern "C" fn ds_spectrum_cover_len(spec: *const DsSpectrum, out: *mut usize) -> DsStatus {
    guard(|| {
        let spec = spec.as_ref().ok_or_else(|| null("spec"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = spec.0.cover.len();
        Ok(())
    })
}

/// Endpoints of cover interval `index`.
#[no_mangle]
pub unsafe extern "C" fn ds_spectrum_cover(spec: *const DsSpectrum, index: usize, lo: *mut f64, hi: *mut f64) -> DsStatus {
    guard(|| {
        let spec = spec.as_ref().ok_or_else(|| null("spec"))?;
        let iv = spec.0.cover.get(index).ok_or_else(|| {
            (DsStatus::DsRange, format!("interval {index} of {}", spec.0.cover.len()))
        })?;
        *lo.as_mut().ok_or_else(|| null("lo"))? = iv[0];
        *hi.as_mut().ok_or_else(|| null("hi"))? = iv[1];
        Ok(())
    })
}

/// Distance from `E` to the spectral cover.
#[no_mangle]
pub unsafe extern "C" fn ds_spectrum_dist(spec: *const DsSpectrum, e_re: f64, e_im: f64, out: *mut f64) -> DsStatus {
    guard(|| {
        let spec = spec.as_ref().ok_or_else(|| null("spec"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = dist_to_spectrum(&spec.0, C64::new(e_re, e_im));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ds_spectrum_free(spec: *mut DsSpectrum) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Resolvent entry `(J − E)^{-1}(n, j)` on the window enlarged by `margin` sites.
#[no_mangle]
pub unsafe extern "C" fn ds_greens_value(
    op: *const DsOperator,
    e_re: f64,
    e_im: f64,
    j: i64,
    n: i64,
    margin: i64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> DsStatus {
    guard(|| {
        let op = op.as_ref().ok_or_else(|| null("op"))?;
        if out_re.is_null() || out_im.is_null() {
            return Err(null("out"));
        }
        if margin < 0 {
            return Err((DsStatus::DsInvalidArgument, "margin must be non-negative".into()));
        }
        let g = greens_column(&op.0, C64::new(e_re, e_im), j, margin).map_err(lib_err)?;
        let v = g.value(n);
        *out_re = v.re;
        *out_im = v.im;
        Ok(())
    })
}
