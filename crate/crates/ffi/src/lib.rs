//! C ABI over the wiener-chaos toolkit.
//!
//! Every fallible call returns a [`WcStatus`]; outputs go through pointer
//! arguments and are written only on success. The message for the most
//! recent failure on the calling thread is available from
//! [`wc_last_error_message`]. Handles are opaque and owned by the caller,
//! who releases them with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wiener_chaos::chaos::{eval_integral, fourth_moment_exact, second_moment_exact, GaussianSample};
use wiener_chaos::embed::{CovarianceModel, Grid, GridEmbedding};
use wiener_chaos::functionals::{
    variance_closed_form_sheet, variance_closed_form_sheet_eps, FunctionalParams, StatisticPlan,
};
use wiener_chaos::rng::par_draws;
use wiener_chaos::tensor::{contraction_norm_sq, symmetrize, SymTensor, Tensor};
use wiener_chaos::Error;

/// Status code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    OrderMismatch = 4,
    Degenerate = 5,
    NonSymmetric = 6,
    SampleTooSmall = 7,
    ModelMismatch = 8,
    Panic = 9,
}

impl From<&Error> for WcStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::DimensionMismatch { .. } => WcStatus::DimensionMismatch,
            Error::OrderMismatch { .. } | Error::InvalidContraction { .. } => WcStatus::OrderMismatch,
            Error::InvalidTensor(_) | Error::InvalidParameter(_) => WcStatus::InvalidArgument,
            Error::Degenerate(_) => WcStatus::Degenerate,
            Error::NonSymmetricKernel { .. } => WcStatus::NonSymmetric,
            Error::SampleTooSmall { .. } => WcStatus::SampleTooSmall,
            Error::ModelMismatch(_) => WcStatus::ModelMismatch,
        }
    }
}

/// Functional family of a statistic plan.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WcFamily {
    FBeta = 0,
    LEps = 1,
    ABeta = 2,
    BEps = 3,
}

/// Grid type; `Anchored` uses the functional's `eps`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WcGridKind {
    Uniform = 0,
    Geometric = 1,
    Anchored = 2,
}

/// Functional parameters. Fields a family does not use are ignored;
/// `A_beta` uses the same `beta` on all `dims` axes.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct WcFunctional {
    pub family: WcFamily,
    pub hurst: f64,
    pub beta: f64,
    pub eps: f64,
    pub dims: usize,
}

/// Exact quantities of a plan on its grid.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct WcPlanMoments {
    pub generator_count: usize,
    pub mean: f64,
    pub normalization: f64,
    pub variance: f64,
    pub excess_kurtosis: f64,
    pub contraction_ratio: f64,
}

/// Symmetric coefficient tensor.
pub struct WcTensor(SymTensor);

/// Embedded second-chaos statistic of a functional.
pub struct WcPlan(StatisticPlan);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(WcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure((&e).into(), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(WcStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            WcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            WcStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

unsafe fn tensor<'a>(t: *const WcTensor) -> Result<&'a SymTensor, Failure> {
    t.as_ref().map(|t| &t.0).ok_or_else(|| null("tensor"))
}

unsafe fn plan<'a>(p: *const WcPlan) -> Result<&'a StatisticPlan, Failure> {
    p.as_ref().map(|p| &p.0).ok_or_else(|| null("plan"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length
/// in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn wc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let bytes = e.borrow();
        let bytes = bytes.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            buf.add(n).write(0);
        }
        bytes.len()
    })
}

/// Symmetrized tensor of order `order` over `dim` coordinates from
/// `dim^order` row-major coefficients.
///
/// # Safety
/// `coeffs` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wc_tensor_new(
    order: usize,
    dim: usize,
    coeffs: *const f64,
    len: usize,
    out: *mut *mut WcTensor,
) -> WcStatus {
    guard(|| {
        let c = slice(coeffs, len, "coeffs")?.to_vec();
        let t = symmetrize(&Tensor::new(order, dim, c)?);
        write(out, Box::into_raw(Box::new(WcTensor(t))))
    })
}

/// # Safety
/// `t` must come from [`wc_tensor_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wc_tensor_free(t: *mut WcTensor) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// # Safety
/// `t` must be a live tensor handle; `order` and `dim` writable.
#[no_mangle]
pub unsafe extern "C" fn wc_tensor_shape(t: *const WcTensor, order: *mut usize, dim: *mut usize) -> WcStatus {
    guard(|| {
        let t = tensor(t)?;
        write(order, t.order())?;
        write(dim, t.dim())
    })
}

/// Copies the `dim^order` coefficients into `out`.
///
/// # Safety
/// `out` must be writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn wc_tensor_coeffs(t: *const WcTensor, out: *mut f64, len: usize) -> WcStatus {
    guard(|| {
        let c = tensor(t)?.coeffs();
        if len != c.len() {
            return Err(Error::DimensionMismatch { expected: c.len(), found: len }.into());
        }
        if out.is_null() {
            return Err(null("output buffer"));
        }
        ptr::copy_nonoverlapping(c.as_ptr(), out, len);
        Ok(())
    })
}

/// `E[I_n(f)²]` and `E[I_n(f)⁴]`.
///
/// # Safety
/// `t` must be a live tensor handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn wc_tensor_moments(t: *const WcTensor, second: *mut f64, fourth: *mut f64) -> WcStatus {
    guard(|| {
        let t = tensor(t)?;
        write(second, second_moment_exact(t))?;
        write(fourth, fourth_moment_exact(t))
    })
}

/// `‖f ⊗_p f‖²`.
///
/// # Safety
/// `t` must be a live tensor handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wc_tensor_contraction_norm_sq(t: *const WcTensor, p: usize, out: *mut f64) -> WcStatus {
    guard(|| write(out, contraction_norm_sq(tensor(t)?, p)?))
}

/// `I_n(f)` at the Gaussian coordinates `xi`.
///
/// # Safety
/// `xi` must hold `len` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wc_eval_integral(t: *const WcTensor, xi: *const f64, len: usize, out: *mut f64) -> WcStatus {
    guard(|| {
        let xi = GaussianSample::new(slice(xi, len, "xi")?.to_vec());
        write(out, eval_integral(tensor(t)?, &xi)?)
    })
}

fn params(f: &WcFunctional) -> Result<FunctionalParams, Error> {
    match f.family {
        WcFamily::FBeta => FunctionalParams::f_beta(f.hurst, f.beta),
        WcFamily::LEps => FunctionalParams::l_eps(f.hurst, f.eps),
        WcFamily::ABeta => FunctionalParams::a_beta(vec![f.beta; f.dims]),
        WcFamily::BEps => FunctionalParams::b_eps(f.dims, f.eps),
    }
}

/// Builds the embedded statistic of `functional` on a grid with `cells`
/// cells (per axis for the sheet).
///
/// # Safety
/// `functional` must be readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wc_plan_new(
    functional: *const WcFunctional,
    grid: WcGridKind,
    cells: usize,
    out: *mut *mut WcPlan,
) -> WcStatus {
    guard(|| {
        let f = functional.as_ref().ok_or_else(|| null("functional"))?;
        let p = params(f)?;
        let model = if p.is_sheet() { CovarianceModel::sheet(p.axes())? } else { CovarianceModel::fractional(f.hurst)? };
        let grid = match grid {
            WcGridKind::Uniform => Grid::uniform(cells)?,
            WcGridKind::Geometric => Grid::geometric(cells, 1)?,
            WcGridKind::Anchored => Grid::anchored(f.eps, cells)?,
        };
        let emb = GridEmbedding::on_grid(model, grid)?;
        write(out, Box::into_raw(Box::new(WcPlan(StatisticPlan::new(&p, &emb)?))))
    })
}

/// # Safety
/// `p` must come from [`wc_plan_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wc_plan_free(p: *mut WcPlan) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live plan handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wc_plan_moments(p: *const WcPlan, out: *mut WcPlanMoments) -> WcStatus {
    guard(|| {
        let p = plan(p)?;
        write(
            out,
            WcPlanMoments {
                generator_count: p.generator_count(),
                mean: p.mean(),
                normalization: p.normalization(),
                variance: p.exact_variance(),
                excess_kurtosis: p.exact_excess_kurtosis(),
                contraction_ratio: p.contraction_ratio(),
            },
        )
    })
}

/// Normalized statistic at the generator coordinates `xi`
/// (`len` = generator count).
///
/// # Safety
/// `xi` must hold `len` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wc_plan_statistic(p: *const WcPlan, xi: *const f64, len: usize, out: *mut f64) -> WcStatus {
    guard(|| {
        let xi = GaussianSample::new(slice(xi, len, "xi")?.to_vec());
        write(out, plan(p)?.statistic(&xi)?)
    })
}

/// `n` spectral draws of the normalized statistic; draw `i` depends only on
/// `(seed, tag, i)`.
///
/// # Safety
/// `tag` must be a NUL-terminated string; `out` writable for `n` values.
#[no_mangle]
pub unsafe extern "C" fn wc_plan_sample(
    p: *const WcPlan,
    seed: u64,
    tag: *const c_char,
    n: usize,
    out: *mut f64,
) -> WcStatus {
    guard(|| {
        let p = plan(p)?;
        if tag.is_null() {
            return Err(null("tag"));
        }
        let tag = CStr::from_ptr(tag)
            .to_str()
            .map_err(|_| Failure(WcStatus::InvalidArgument, "tag is not UTF-8".into()))?;
        if n > 0 && out.is_null() {
            return Err(null("output buffer"));
        }
        let xs = par_draws(seed, tag, n, |rng| p.sample_spectral(rng));
        ptr::copy_nonoverlapping(xs.as_ptr(), out, n);
        Ok(())
    })
}

/// Continuum variance of the normalized `A_beta` statistic.
///
/// # Safety
/// `betas` must hold `n` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wc_sheet_variance_a_beta(betas: *const f64, n: usize, out: *mut f64) -> WcStatus {
    guard(|| write(out, variance_closed_form_sheet(slice(betas, n, "betas")?)?))
}

/// Continuum variance of the normalized `B_eps` statistic.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wc_sheet_variance_b_eps(dims: usize, eps: f64, out: *mut f64) -> WcStatus {
    guard(|| write(out, variance_closed_form_sheet_eps(dims, eps)?))
}
