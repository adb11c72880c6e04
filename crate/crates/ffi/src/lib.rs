//! C interface over opaque handles. Every fallible call returns an
//! [`HbStatus`]; on failure the message is available from [`hb_last_error`]
//! on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hbundle::bundle::{build_skew_product, is_admissible, weil_check, CircleExtension, SkewProduct};
use hbundle::dynamics::correlation::required_mesh;
use hbundle::dynamics::{birkhoff_average, correlation_series_grid, ModeObservable};
use hbundle::flow::{FlowError, FlowState, HeisenbergFlow};
use hbundle::iet::{IetMap, IetSpec, Permutation};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Panic = 4,
}

/// An interval exchange.
pub struct HbIet {
    map: IetMap,
}

/// An affine skew product over an interval exchange.
pub struct HbSkew {
    skew: SkewProduct,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(HbStatus, String);

fn invalid(msg: impl ToString) -> Failure {
    Failure(HbStatus::InvalidArgument, msg.to_string())
}

fn numerical(msg: impl ToString) -> Failure {
    Failure(HbStatus::Numerical, msg.to_string())
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> HbStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => HbStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HbStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if p.is_null() {
        return Err(Failure(HbStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(Failure(HbStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure(HbStatus::NullPointer, format!("{what} is null")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(HbStatus::NullPointer, format!("{what} is null")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds an exchange from the monodromy `p` (values 1..=d, top order
/// A, B, …) and lengths `lambda`.
///
/// # Safety
/// `monodromy` and `lambda` must point to `d` readable values; the output must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn hb_iet_new(
    monodromy: *const u32,
    lambda: *const f64,
    d: usize,
    out_iet: *mut *mut HbIet,
) -> HbStatus {
    guard(|| {
        let p: Vec<usize> = slice(monodromy, d, "monodromy")?.iter().map(|&v| v as usize).collect();
        let lambda = slice(lambda, d, "lambda")?.to_vec();
        let slot = out(out_iet, "out")?;
        let perm = Permutation::from_monodromy(&p).map_err(invalid)?;
        let spec = IetSpec::new(perm, lambda).map_err(invalid)?;
        *slot = Box::into_raw(Box::new(HbIet { map: IetMap::new(spec) }));
        Ok(())
    })
}

/// # Safety
/// `iet` must come from [`hb_iet_new`] and not be used afterwards. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn hb_iet_free(iet: *mut HbIet) {
    if !iet.is_null() {
        drop(Box::from_raw(iet));
    }
}

/// # Safety
/// `iet` must be a live handle and the output writable.
#[no_mangle]
pub unsafe extern "C" fn hb_iet_dimension(iet: *const HbIet, out_d: *mut usize) -> HbStatus {
    guard(|| {
        *out(out_d, "out")? = handle(iet, "iet")?.map.d();
        Ok(())
    })
}

/// # Safety
/// `iet` must be a live handle and the output writable.
#[no_mangle]
pub unsafe extern "C" fn hb_iet_total_length(iet: *const HbIet, out_len: *mut f64) -> HbStatus {
    guard(|| {
        *out(out_len, "out")? = handle(iet, "iet")?.map.total_length();
        Ok(())
    })
}

/// # Safety
/// `iet` must be a live handle and the output writable.
#[no_mangle]
pub unsafe extern "C" fn hb_iet_apply(iet: *const HbIet, x: f64, out_x: *mut f64) -> HbStatus {
    guard(|| {
        let map = &handle(iet, "iet")?.map;
        let slot = out(out_x, "out")?;
        *slot = map.apply(x).map_err(invalid)?;
        Ok(())
    })
}

/// Writes `T¹x₀, …, Tⁿx₀` to `points`. `reliable` is cleared when the orbit
/// passed within the breakpoint guard.
///
/// # Safety
/// `points` must have room for `n` values; `reliable` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hb_iet_orbit(
    iet: *const HbIet,
    x0: f64,
    n: usize,
    points: *mut f64,
    reliable: *mut bool,
) -> HbStatus {
    guard(|| {
        let map = &handle(iet, "iet")?.map;
        let dst = slice_mut(points, n, "points")?;
        let flag = out(reliable, "reliable")?;
        let orbit = map.orbit(x0, n).map_err(invalid)?;
        dst.copy_from_slice(&orbit.points);
        *flag = orbit.reliable;
        Ok(())
    })
}

/// Checks heights and offsets against the cone, Weil integrality and every
/// orbit constraint. `max_residual` receives the largest constraint
/// residual (0 when there are none).
///
/// # Safety
/// `h` and `b` must point to `d` readable values; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn hb_iet_is_admissible(
    iet: *const HbIet,
    h: *const f64,
    b: *const f64,
    d: usize,
    admissible: *mut bool,
    max_residual: *mut f64,
) -> HbStatus {
    guard(|| {
        let map = &handle(iet, "iet")?.map;
        let (h, b) = (slice(h, d, "h")?, slice(b, d, "b")?);
        let (flag, worst) = (out(admissible, "admissible")?, out(max_residual, "max_residual")?);
        let report = is_admissible(map.spec(), h, b).map_err(invalid)?;
        *flag = report.admissible;
        *worst = report.constraint_residuals.iter().copied().fold(0.0, f64::max);
        Ok(())
    })
}

/// Skew product `(x, ρ) ↦ (Tx, ρ + h_α(x − ∂I_α) + b_α)`. The area
/// `Σ λ_α h_α` must be an integer.
///
/// # Safety
/// `iet` must be a live handle, `h` and `b` must point to `d` readable
/// values and the output must be writable. The new handle does not borrow `iet`.
#[no_mangle]
pub unsafe extern "C" fn hb_skew_new(
    iet: *const HbIet,
    h: *const f64,
    b: *const f64,
    d: usize,
    out_skew: *mut *mut HbSkew,
) -> HbStatus {
    guard(|| {
        let map = &handle(iet, "iet")?.map;
        let (h, b) = (slice(h, d, "h")?.to_vec(), slice(b, d, "b")?.to_vec());
        let slot = out(out_skew, "out")?;
        if h.len() == map.d() && !weil_check(map.spec().lambda(), &h) {
            return Err(invalid("area is not an integer"));
        }
        let skew = build_skew_product(map.clone(), h, b).map_err(invalid)?;
        *slot = Box::into_raw(Box::new(HbSkew { skew }));
        Ok(())
    })
}

/// # Safety
/// `skew` must come from [`hb_skew_new`] and not be used afterwards. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn hb_skew_free(skew: *mut HbSkew) {
    if !skew.is_null() {
        drop(Box::from_raw(skew));
    }
}

/// # Safety
/// `skew` must be a live handle and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn hb_skew_apply(
    skew: *const HbSkew,
    x: f64,
    rho: f64,
    out_x: *mut f64,
    out_rho: *mut f64,
) -> HbStatus {
    guard(|| {
        let s = &handle(skew, "skew")?.skew;
        let (ox, orho) = (out(out_x, "out_x")?, out(out_rho, "out_rho")?);
        (*ox, *orho) = s.apply(x, rho).map_err(invalid)?;
        Ok(())
    })
}

/// Birkhoff average of `e^{2πi·mode·ρ}` over `n` points from `(x0, rho0)`.
///
/// # Safety
/// `skew` must be a live handle and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn hb_skew_birkhoff_mode(
    skew: *const HbSkew,
    mode: i64,
    x0: f64,
    rho0: f64,
    n: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> HbStatus {
    guard(|| {
        let s = &handle(skew, "skew")?.skew;
        let (re, im) = (out(out_re, "out_re")?, out(out_im, "out_im")?);
        let avg = birkhoff_average(s, &ModeObservable::one(mode), (x0, rho0), n).map_err(invalid)?;
        (*re, *im) = (avg.average.re, avg.average.im);
        Ok(())
    })
}

/// Correlations `C(0), …, C(n_max)` of the constant mode-`mode` observable,
/// by quadrature.
///
/// # Safety
/// `out_re` and `out_im` must each have room for `n_max + 1` values.
#[no_mangle]
pub unsafe extern "C" fn hb_skew_correlation(
    skew: *const HbSkew,
    mode: i64,
    n_max: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> HbStatus {
    guard(|| {
        let s = &handle(skew, "skew")?.skew;
        let len = n_max.checked_add(1).ok_or_else(|| invalid("n_max too large"))?;
        let re = slice_mut(out_re, len, "out_re")?;
        let im = slice_mut(out_im, len, "out_im")?;
        let obs = ModeObservable::one(mode);
        let mesh = required_mesh(s.base().d(), n_max);
        let series = correlation_series_grid(s, &obs, &obs, n_max, mesh).map_err(numerical)?;
        for (k, z) in series.values.iter().enumerate() {
            re[k] = z.re;
            im[k] = z.im;
        }
        Ok(())
    })
}

/// Fiber shift after the square of side `t` started a quarter of the way
/// into the longest interval, a quarter of its height up.
///
/// # Safety
/// `skew` must be a live handle and the output writable.
#[no_mangle]
pub unsafe extern "C" fn hb_skew_commutator_shift(skew: *const HbSkew, t: f64, out_shift: *mut f64) -> HbStatus {
    guard(|| {
        let s = &handle(skew, "skew")?.skew;
        let slot = out(out_shift, "out")?;
        let map = s.base();
        let lambda = map.spec().lambda();
        let a = (0..lambda.len()).fold(0, |best, a| if lambda[a] > lambda[best] { a } else { best });
        let state = FlowState { letter: a, x: map.breakpoints()[a] + 0.25 * lambda[a], s: 0.25 * s.h()[a], rho: 0.0 };
        let flow = HeisenbergFlow::new(s.clone());
        *slot = flow.commutator_shift(state, t).map_err(|e| match e {
            FlowError::ChartExit { .. } => invalid(e),
            other => numerical(other),
        })?;
        Ok(())
    })
}
