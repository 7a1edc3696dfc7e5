//! C interface to `geostoch`.
//!
//! Objects are opaque heap handles created by `gs_*_new`/`gs_*_parse` and
//! released with the matching `gs_*_free`. Every fallible call returns a
//! [`GsStatus`]; on failure the message is available from
//! [`gs_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use geostoch::feynman_kac::{circle_function, circle_potential, fki_mc, fki_spectral_circle};
use geostoch::integrals::{approx_a, approx_s};
use geostoch::{forms, DyadicPath, Error, IntervalMeasure, ManifoldId, ManifoldPoint, OneForm, TangentVector};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Unsupported = 3,
    CutLocus = 4,
    BufferTooSmall = 5,
    Internal = 6,
    Panic = 7,
}

pub struct GsManifold {
    inner: ManifoldId,
}

pub struct GsMeasure {
    inner: IntervalMeasure,
}

pub struct GsForm {
    manifold: ManifoldId,
    inner: OneForm,
}

pub struct GsPath {
    inner: DyadicPath,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

struct Fail(GsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::CutLocus => GsStatus::CutLocus,
            Error::Unsupported(_) => GsStatus::Unsupported,
            Error::Io(_) | Error::Json(_) => GsStatus::Internal,
            _ => GsStatus::InvalidArgument,
        };
        Fail(code, e.to_string())
    }
}

fn fail(code: GsStatus, msg: impl Into<String>) -> Fail {
    Fail(code, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            GsStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            GsStatus::Panic
        }
    }
}

unsafe fn arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| fail(GsStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| fail(GsStatus::NullPointer, format!("{name} is null")))
}

unsafe fn text<'a>(s: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(fail(GsStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(GsStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(fail(GsStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out(dst: *mut f64, src: &[f64]) -> Result<(), Fail> {
    if dst.is_null() {
        return Err(fail(GsStatus::NullPointer, "output buffer is null"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread ("" after a success).
/// Valid until the next `gs_*` call on the same thread.
#[no_mangle]
pub extern "C" fn gs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a manifold spec such as `"euclidean:2"`, `"torus:2:1,1"`, `"sphere2"`, `"hyperbolic2"`.
///
/// # Safety
/// `spec` must be a valid NUL-terminated string and `out_manifold` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gs_manifold_parse(spec: *const c_char, out_manifold: *mut *mut GsManifold) -> GsStatus {
    guard(|| {
        let m: ManifoldId = text(spec, "spec")?.parse()?;
        *out(out_manifold, "out_manifold")? = boxed(GsManifold { inner: m });
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from [`gs_manifold_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_manifold_free(m: *mut GsManifold) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Intrinsic dimension, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_manifold_dim(m: *const GsManifold) -> usize {
    m.as_ref().map_or(0, |m| m.inner.dim())
}

/// Number of coordinates of a point (3 on the sphere), or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_manifold_coord_len(m: *const GsManifold) -> usize {
    m.as_ref().map_or(0, |m| m.inner.coord_len())
}

/// Geodesic distance. `x` and `y` hold `coord_len` values each.
///
/// # Safety
/// Pointers must be valid for `coord_len` reads and one write.
#[no_mangle]
pub unsafe extern "C" fn gs_manifold_dist(m: *const GsManifold, x: *const f64, y: *const f64, out_dist: *mut f64) -> GsStatus {
    guard(|| {
        let m = &arg(m, "manifold")?.inner;
        let n = m.coord_len();
        let x = ManifoldPoint::new(slice(x, n, "x")?);
        let y = ManifoldPoint::new(slice(y, n, "y")?);
        m.validate_point(&x)?;
        m.validate_point(&y)?;
        *out(out_dist, "out_dist")? = m.dist(&x, &y);
        Ok(())
    })
}

/// exp_x(v), written to `out_y` (`coord_len` values).
///
/// # Safety
/// Pointers must be valid for `coord_len` reads or writes.
#[no_mangle]
pub unsafe extern "C" fn gs_manifold_exp(m: *const GsManifold, x: *const f64, v: *const f64, out_y: *mut f64) -> GsStatus {
    guard(|| {
        let m = &arg(m, "manifold")?.inner;
        let n = m.coord_len();
        let x = ManifoldPoint::new(slice(x, n, "x")?);
        m.validate_point(&x)?;
        let y = m.exp_map(&x, &TangentVector::new(slice(v, n, "v")?))?;
        write_out(out_y, &y.coords)
    })
}

/// log_x(y), written to `out_v` (`coord_len` values). Fails with
/// `CutLocus` when no unique minimizing geodesic exists.
///
/// # Safety
/// Pointers must be valid for `coord_len` reads or writes.
#[no_mangle]
pub unsafe extern "C" fn gs_manifold_log(m: *const GsManifold, x: *const f64, y: *const f64, out_v: *mut f64) -> GsStatus {
    guard(|| {
        let m = &arg(m, "manifold")?.inner;
        let n = m.coord_len();
        let x = ManifoldPoint::new(slice(x, n, "x")?);
        let y = ManifoldPoint::new(slice(y, n, "y")?);
        m.validate_point(&x)?;
        m.validate_point(&y)?;
        let v = m.log_map(&x, &y)?;
        write_out(out_v, &v.components)
    })
}

/// Parses an interval measure such as `"dirac:0.5"`, `"lebesgue"`, `"mix:0.5@0+0.5@1"`.
///
/// # Safety
/// `spec` must be a valid NUL-terminated string and `out_measure` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gs_measure_parse(spec: *const c_char, out_measure: *mut *mut GsMeasure) -> GsStatus {
    guard(|| {
        let p: IntervalMeasure = text(spec, "spec")?.parse()?;
        *out(out_measure, "out_measure")? = boxed(GsMeasure { inner: p });
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from [`gs_measure_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_measure_free(p: *mut GsMeasure) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// First moment M₁ of the measure.
///
/// # Safety
/// `p` must be a live handle and `out_m1` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn gs_measure_first_moment(p: *const GsMeasure, out_m1: *mut f64) -> GsStatus {
    guard(|| {
        *out(out_m1, "out_m1")? = arg(p, "measure")?.inner.first_moment();
        Ok(())
    })
}

/// Looks up a registered 1-form on `m` by key, e.g. `"x_dy"` or `"a_dtheta:0.3"`.
///
/// # Safety
/// `m` must be a live handle, `key` a NUL-terminated string, `out_form` valid.
#[no_mangle]
pub unsafe extern "C" fn gs_form_lookup(m: *const GsManifold, key: *const c_char, out_form: *mut *mut GsForm) -> GsStatus {
    guard(|| {
        let m = &arg(m, "manifold")?.inner;
        let alpha = forms::form(m, text(key, "key")?)?;
        *out(out_form, "out_form")? = boxed(GsForm {
            manifold: m.clone(),
            inner: alpha,
        });
        Ok(())
    })
}

/// # Safety
/// `f` must be null or a handle from [`gs_form_lookup`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_form_free(f: *mut GsForm) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Samples the dyadic skeleton at level `k` of a Brownian path on [0, t]
/// started at `x0`. The result depends only on `(seed, path_index)`.
///
/// # Safety
/// `m` must be a live handle, `x0` valid for `coord_len` reads, `out_path` valid.
#[no_mangle]
pub unsafe extern "C" fn gs_sample_bm(
    m: *const GsManifold,
    x0: *const f64,
    t: f64,
    k: u32,
    seed: u64,
    path_index: u64,
    out_path: *mut *mut GsPath,
) -> GsStatus {
    guard(|| {
        let m = &arg(m, "manifold")?.inner;
        if k > 24 {
            return Err(fail(GsStatus::InvalidArgument, format!("level {k} > 24")));
        }
        let x0 = ManifoldPoint::new(slice(x0, m.coord_len(), "x0")?);
        let path = geostoch::sample_bm(m, &x0, t, k, seed, path_index)?;
        *out(out_path, "out_path")? = boxed(GsPath { inner: path });
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from [`gs_sample_bm`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_path_free(p: *mut GsPath) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of points (2^k + 1), or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_path_len(p: *const GsPath) -> usize {
    p.as_ref().map_or(0, |p| p.inner.points().len())
}

/// Copies the path points, row-major, into `buf` of `buf_len` doubles.
/// Fails with `BufferTooSmall` unless `buf_len ≥ len · coord_len`.
///
/// # Safety
/// `buf` must be valid for `buf_len` writes.
#[no_mangle]
pub unsafe extern "C" fn gs_path_points(p: *const GsPath, buf: *mut f64, buf_len: usize) -> GsStatus {
    guard(|| {
        let path = &arg(p, "path")?.inner;
        let c = path.manifold().coord_len();
        let need = path.points().len() * c;
        if buf_len < need {
            return Err(fail(GsStatus::BufferTooSmall, format!("need {need} doubles, got {buf_len}")));
        }
        let flat: Vec<f64> = path.points().iter().flat_map(|x| x.coords.iter().copied()).collect();
        write_out(buf, &flat)
    })
}

unsafe fn approx(
    p: *const GsMeasure,
    f: *const GsForm,
    path: *const GsPath,
    out_value: *mut f64,
    corrected: bool,
) -> GsStatus {
    guard(|| {
        let p = &arg(p, "measure")?.inner;
        let f = arg(f, "form")?;
        let path = &arg(path, "path")?.inner;
        if &f.manifold != path.manifold() {
            return Err(fail(
                GsStatus::InvalidArgument,
                format!("form lives on {}, path on {}", f.manifold, path.manifold()),
            ));
        }
        *out(out_value, "out_value")? = if corrected {
            approx_s(p, &f.inner, path)
        } else {
            approx_a(p, &f.inner, path)
        };
        Ok(())
    })
}

/// Dyadic approximant A_P of the stochastic integral of `form` along `path`.
///
/// # Safety
/// All handles must be live and `out_value` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn gs_approx_a(
    measure: *const GsMeasure,
    form: *const GsForm,
    path: *const GsPath,
    out_value: *mut f64,
) -> GsStatus {
    approx(measure, form, path, out_value, false)
}

/// Corrected approximant S_P = A_P + (2M₁ − 1)·∫ d*α dt, which has the
/// Stratonovich limit for every P.
///
/// # Safety
/// All handles must be live and `out_value` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn gs_approx_s(
    measure: *const GsMeasure,
    form: *const GsForm,
    path: *const GsPath,
    out_value: *mut f64,
) -> GsStatus {
    approx(measure, form, path, out_value, true)
}

/// Monte Carlo estimate of (e^{−tH} f)(x) on the 2π circle for α = a dθ,
/// with registered potential and function keys. `out_value` receives
/// [re, im]; `out_stderr` may be null.
///
/// # Safety
/// Strings must be NUL-terminated, `out_value` valid for two writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn gs_fki_circle_mc(
    a: f64,
    potential: *const c_char,
    function: *const c_char,
    x: f64,
    t: f64,
    n_paths: usize,
    k: u32,
    seed: u64,
    out_value: *mut f64,
    out_stderr: *mut f64,
) -> GsStatus {
    guard(|| {
        let m = ManifoldId::circle();
        let alpha = forms::form(&m, &format!("a_dtheta:{a}"))?;
        let (v, _) = circle_potential(text(potential, "potential")?)?;
        let (f, _) = circle_function(text(function, "function")?)?;
        let x = m.normalize(ManifoldPoint::new(&[x]));
        let est = fki_mc(&m, &alpha, &v, &f, &x, t, n_paths, k, seed)?;
        write_out(out_value, &[est.value.re, est.value.im])?;
        if let Some(se) = out_stderr.as_mut() {
            *se = est.stderr;
        }
        Ok(())
    })
}

/// Spectral reference for [`gs_fki_circle_mc`] using Fourier modes −n_modes..=n_modes.
///
/// # Safety
/// Strings must be NUL-terminated, `out_value` valid for two writes.
#[no_mangle]
pub unsafe extern "C" fn gs_fki_circle_spectral(
    a: f64,
    potential: *const c_char,
    function: *const c_char,
    x: f64,
    t: f64,
    n_modes: usize,
    out_value: *mut f64,
) -> GsStatus {
    guard(|| {
        let (_, v_hat) = circle_potential(text(potential, "potential")?)?;
        let (_, f_hat) = circle_function(text(function, "function")?)?;
        let z = fki_spectral_circle(a, &v_hat, &f_hat, x, t, n_modes)?;
        write_out(out_value, &[z.re, z.im])
    })
}
