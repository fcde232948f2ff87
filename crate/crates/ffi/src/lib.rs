//! C ABI for the fusscat core.
//!
//! Every fallible call returns an [`FcStatus`]; on failure a message is kept
//! per thread and can be read with [`fc_last_error`]. Objects cross the
//! boundary as opaque handles that the caller releases with the matching
//! `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fusscat::analysis::kolmogorov_distance;
use fusscat::density::{cdf_from_density, density_grid, symmetrize_cdf, CdfTable};
use fusscat::moments::fuss_catalan_closed;
use fusscat::rmt_sim::{simulate_trial, EntryDistribution, Spectrum, TruncationPolicy};
use fusscat::stieltjes::{solve_stieltjes, Form};
use fusscat::Error;
use num_complex::Complex64;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcStatus {
    Ok = 0,
    InvalidArgument = 1,
    Numerical = 2,
    ResourceLimit = 3,
    BufferTooSmall = 4,
    Io = 5,
    Panic = 6,
}

/// Which fixed-point equation a transform call solves.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcForm {
    Squared = 0,
    Symmetrized = 1,
}

impl From<FcForm> for Form {
    fn from(f: FcForm) -> Form {
        match f {
            FcForm::Squared => Form::Squared,
            FcForm::Symmetrized => Form::Symmetrized,
        }
    }
}

/// Piecewise-linear distribution function of a limiting law.
pub struct FcCdf(CdfTable);

/// Squared singular values of one simulated matrix, nonincreasing.
pub struct FcSpectrum(Spectrum);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FcStatus {
    match e {
        Error::InvalidArgument(_) => FcStatus::InvalidArgument,
        Error::ResourceLimit { .. } => FcStatus::ResourceLimit,
        Error::Io(_) => FcStatus::Io,
        _ if e.is_numerical() => FcStatus::Numerical,
        _ => FcStatus::InvalidArgument,
    }
}

struct Fail(FcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: &str) -> Fail {
    Fail(FcStatus::InvalidArgument, msg.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> FcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FcStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FcStatus::Panic
        }
    }
}

fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    // SAFETY: callers promise `p` is null or valid for writes.
    unsafe { p.as_mut() }.ok_or_else(|| invalid("null output pointer"))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Writes `alpha_k(m)` in decimal, NUL-terminated, into `buf`.
///
/// `*needed` receives the buffer size required including the NUL; when
/// `buf_len` is too small nothing is written and `BufferTooSmall` is returned.
///
/// # Safety
/// `buf` must be valid for `buf_len` bytes (or null with `buf_len == 0`);
/// `needed` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fc_moment(m: u32, k: usize, buf: *mut c_char, buf_len: usize, needed: *mut usize) -> FcStatus {
    guard(|| {
        let needed = out_ref(needed)?;
        let text = fuss_catalan_closed(m, k)?.to_string();
        *needed = text.len() + 1;
        if buf.is_null() || buf_len < text.len() + 1 {
            return Err(Fail(FcStatus::BufferTooSmall, format!("moment needs {} bytes", text.len() + 1)));
        }
        ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
        *buf.add(text.len()) = 0;
        Ok(())
    })
}

/// Physical root `s(z)` of the fixed-point equation and its residual.
///
/// # Safety
/// Output pointers must be valid for writes; `residual` may be null.
#[no_mangle]
pub unsafe extern "C" fn fc_stieltjes_solve(
    m: u32,
    form: FcForm,
    re: f64,
    im: f64,
    s_re: *mut f64,
    s_im: *mut f64,
    residual: *mut f64,
) -> FcStatus {
    guard(|| {
        let (s_re, s_im) = (out_ref(s_re)?, out_ref(s_im)?);
        let p = solve_stieltjes(m, Complex64::new(re, im), form.into())?;
        *s_re = p.s.re;
        *s_im = p.s.im;
        if let Some(r) = residual.as_mut() {
            *r = p.residual_mag;
        }
        Ok(())
    })
}

/// Limiting CDF of the squared singular values for power `m`.
///
/// # Safety
/// `out` must be valid for writes. Release the handle with [`fc_cdf_free`].
#[no_mangle]
pub unsafe extern "C" fn fc_cdf_new(m: u32, points: usize, v_offset: f64, out: *mut *mut FcCdf) -> FcStatus {
    guard(|| {
        let out = out_ref(out)?;
        let table = cdf_from_density(&density_grid(m, points, v_offset)?)?;
        *out = Box::into_raw(Box::new(FcCdf(table)));
        Ok(())
    })
}

/// Symmetrized law `(1 + sgn(x) G(x^2)) / 2` as a new handle.
///
/// # Safety
/// `cdf` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fc_cdf_symmetrize(cdf: *const FcCdf, out: *mut *mut FcCdf) -> FcStatus {
    guard(|| {
        let out = out_ref(out)?;
        let cdf = cdf.as_ref().ok_or_else(|| invalid("null CDF handle"))?;
        *out = Box::into_raw(Box::new(FcCdf(symmetrize_cdf(&cdf.0)?)));
        Ok(())
    })
}

/// `G(x)`, clamped to `[0, 1]`; NaN for a null handle.
///
/// # Safety
/// `cdf` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fc_cdf_eval(cdf: *const FcCdf, x: f64) -> f64 {
    cdf.as_ref().map_or(f64::NAN, |c| c.0.eval(x))
}

/// Number of knots; 0 for a null handle.
///
/// # Safety
/// `cdf` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fc_cdf_len(cdf: *const FcCdf) -> usize {
    cdf.as_ref().map_or(0, |c| c.0.len())
}

/// Copy the knots into `x` and `g`, each of length at least [`fc_cdf_len`].
///
/// # Safety
/// `cdf` must be a live handle; `x` and `g` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fc_cdf_knots(cdf: *const FcCdf, x: *mut f64, g: *mut f64, len: usize) -> FcStatus {
    guard(|| {
        let cdf = cdf.as_ref().ok_or_else(|| invalid("null CDF handle"))?;
        let n = cdf.0.len();
        if x.is_null() || g.is_null() || len < n {
            return Err(Fail(FcStatus::BufferTooSmall, format!("CDF needs {n} slots")));
        }
        ptr::copy_nonoverlapping(cdf.0.x().as_ptr(), x, n);
        ptr::copy_nonoverlapping(cdf.0.g().as_ptr(), g, n);
        Ok(())
    })
}

/// # Safety
/// `cdf` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fc_cdf_free(cdf: *mut FcCdf) {
    if !cdf.is_null() {
        drop(Box::from_raw(cdf));
    }
}

/// Simulate one `n x n` matrix power and return its squared singular values.
///
/// `dist` is a distribution name such as `complex_gaussian` or
/// `centered_bernoulli(0.3)`. `tau_exp <= 0` selects the default exponent.
///
/// # Safety
/// `dist` must be a NUL-terminated string; `out` must be valid for writes.
/// Release the handle with [`fc_spectrum_free`].
#[no_mangle]
pub unsafe extern "C" fn fc_spectrum_simulate(
    n: usize,
    m: u32,
    dist: *const c_char,
    seed: u64,
    truncate: bool,
    tau_exp: f64,
    out: *mut *mut FcSpectrum,
) -> FcStatus {
    guard(|| {
        let out = out_ref(out)?;
        if dist.is_null() {
            return Err(invalid("null distribution name"));
        }
        let name = CStr::from_ptr(dist)
            .to_str()
            .map_err(|_| invalid("distribution name is not UTF-8"))?;
        let dist: EntryDistribution = name.parse()?;
        let mut policy = TruncationPolicy {
            enabled: truncate,
            ..Default::default()
        };
        if tau_exp > 0.0 {
            policy.tau_exp = tau_exp;
        }
        let trial = simulate_trial(n, m, &dist, seed, policy)?;
        *out = Box::into_raw(Box::new(FcSpectrum(trial.spectrum)));
        Ok(())
    })
}

/// # Safety
/// `spec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fc_spectrum_len(spec: *const FcSpectrum) -> usize {
    spec.as_ref().map_or(0, |s| s.0.n())
}

/// Copy the values (nonincreasing) into `out`.
///
/// # Safety
/// `spec` must be a live handle; `out` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fc_spectrum_values(spec: *const FcSpectrum, out: *mut f64, len: usize) -> FcStatus {
    guard(|| {
        let spec = spec.as_ref().ok_or_else(|| invalid("null spectrum handle"))?;
        let v = spec.0.values();
        if out.is_null() || len < v.len() {
            return Err(Fail(FcStatus::BufferTooSmall, format!("spectrum needs {} slots", v.len())));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
        Ok(())
    })
}

/// # Safety
/// `spec` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fc_spectrum_free(spec: *mut FcSpectrum) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// `sup_x |F_n(x) - G(x)|` between a simulated spectrum and a CDF.
///
/// # Safety
/// Both handles must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fc_kolmogorov_distance(spec: *const FcSpectrum, cdf: *const FcCdf, out: *mut f64) -> FcStatus {
    guard(|| {
        let out = out_ref(out)?;
        let spec = spec.as_ref().ok_or_else(|| invalid("null spectrum handle"))?;
        let cdf = cdf.as_ref().ok_or_else(|| invalid("null CDF handle"))?;
        *out = kolmogorov_distance(&spec.0, &cdf.0)?;
        Ok(())
    })
}
