//! C ABI over `stefan_limits`.
//!
//! Objects cross the boundary as opaque handles created by `sl_*_new` or
//! `sl_*_from_*` and released by the matching `sl_*_free`. Every fallible
//! call returns an [`SlStatus`]; the message of the last failure on the
//! calling thread is available through [`sl_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use num_complex::Complex64;
use stefan_limits::experiments::{run_study, Config, Study};
use stefan_limits::model::{make_compatible_data, Coefficient};
use stefan_limits::solver::solve_full;
use stefan_limits::symbols::{m_symbol, omega, triangle_ratio, SectorPoint};
use stefan_limits::{validate_params, Grids, PhysicalParams, SolutionTriple, StefanError};

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalFailure = 3,
    Io = 4,
    Config = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Studies runnable through [`sl_run_study`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStudy {
    Uniformity = 0,
    Limit = 1,
    Sector = 2,
    Validate = 3,
    CrossCheck = 4,
}

/// Side of the interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlSide {
    Plus = 0,
    Minus = 1,
}

/// Physical parameters.
pub struct SlParams {
    inner: PhysicalParams,
}

/// Parsed study configuration.
pub struct SlConfig {
    inner: Config,
}

/// Gridded solution of one full solve.
pub struct SlSolution {
    grids: Grids,
    sol: SolutionTriple,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &StefanError) -> SlStatus {
    match err {
        StefanError::InvalidParam { .. }
        | StefanError::InvalidGrid(_)
        | StefanError::Shape(_)
        | StefanError::Incompatible(_)
        | StefanError::ZeroTrace(_)
        | StefanError::BranchCut { .. }
        | StefanError::NormSpec(_)
        | StefanError::Sector(_) => SlStatus::InvalidArgument,
        StefanError::Config(_) => SlStatus::Config,
        StefanError::Io(_) => SlStatus::Io,
        _ => SlStatus::NumericalFailure,
    }
}

fn fail(err: StefanError) -> SlStatus {
    let s = status_of(&err);
    set_error(err.to_string());
    s
}

fn guard(f: impl FnOnce() -> SlStatus) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("panic inside stefan_limits");
            SlStatus::Panic
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            set_error(concat!("`", stringify!($p), "` is null"));
            return SlStatus::NullPointer;
        })+
    };
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, SlStatus> {
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string is not valid UTF-8");
        SlStatus::InvalidArgument
    })
}

/// Copies the last error message of this thread, NUL-terminated, into `buf`.
///
/// Returns the message length without the terminator; nothing is written
/// when `buf` is null or `len` is too small.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sl_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > bytes.len() {
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), bytes.len());
            *buf.add(bytes.len()) = 0;
        }
        bytes.len()
    })
}

/// Creates validated parameters with constant `a±`.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to free with [`sl_params_free`].
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn sl_params_new(
    c_plus: f64,
    c_minus: f64,
    delta: f64,
    sigma: f64,
    kappa: f64,
    a_plus: f64,
    a_minus: f64,
    p: f64,
    r_bound: f64,
    out: *mut *mut SlParams,
) -> SlStatus {
    non_null!(out);
    guard(|| {
        let params = PhysicalParams {
            c_plus,
            c_minus,
            delta,
            sigma,
            kappa,
            a_plus: Coefficient::constant(a_plus),
            a_minus: Coefficient::constant(a_minus),
            p,
            r_bound,
        };
        match validate_params(params) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SlParams { inner }));
                SlStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `params` must be null or a handle from [`sl_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_params_free(params: *mut SlParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// `ω = (λ + κ + c z)^{1/2}` on the principal branch.
///
/// # Safety
/// `out_re` and `out_im` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sl_omega(
    lambda_re: f64,
    lambda_im: f64,
    z_re: f64,
    z_im: f64,
    c: f64,
    kappa: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> SlStatus {
    non_null!(out_re, out_im);
    guard(|| match omega(Complex64::new(lambda_re, lambda_im), Complex64::new(z_re, z_im), c, kappa) {
        Ok(w) => {
            *out_re = w.re;
            *out_im = w.im;
            SlStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// The boundary symbol `m(λ, z)` at the `(δ, σ, κ)` of `params`.
///
/// # Safety
/// `params` must be a live handle; `out_re` and `out_im` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sl_m_symbol(
    params: *const SlParams,
    lambda_re: f64,
    lambda_im: f64,
    z_re: f64,
    z_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> SlStatus {
    non_null!(params, out_re, out_im);
    guard(|| {
        let p = &(*params).inner;
        let pt = SectorPoint::new(Complex64::new(lambda_re, lambda_im), Complex64::new(z_re, z_im), p.delta, p.sigma);
        let m = m_symbol(&pt, p);
        if !(m.re.is_finite() && m.im.is_finite()) {
            set_error("m is not finite at this point");
            return SlStatus::NumericalFailure;
        }
        *out_re = m.re;
        *out_im = m.im;
        SlStatus::Ok
    })
}

/// `|f₁ + f₂| / (|f₁| + |f₂|)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_triangle_ratio(f1_re: f64, f1_im: f64, f2_re: f64, f2_im: f64, out: *mut f64) -> SlStatus {
    non_null!(out);
    guard(|| match triangle_ratio(Complex64::new(f1_re, f1_im), Complex64::new(f2_re, f2_im)) {
        Ok(r) => {
            *out = r;
            SlStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Parses a JSON configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_config_from_json(json: *const c_char, out: *mut *mut SlConfig) -> SlStatus {
    non_null!(json, out);
    guard(|| {
        let text = match c_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match Config::from_json(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SlConfig { inner }));
                SlStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `config` must be null or a handle from [`sl_config_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_config_free(config: *mut SlConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs a study and writes its artifacts into `out_dir`.
///
/// `failed` receives whether any row or check of the study failed.
///
/// # Safety
/// `config` must be a live handle, `out_dir` a NUL-terminated path and `failed` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_run_study(
    config: *const SlConfig,
    study: SlStudy,
    out_dir: *const c_char,
    failed: *mut bool,
) -> SlStatus {
    non_null!(config, out_dir, failed);
    guard(|| {
        let dir = match c_str(out_dir) {
            Ok(d) => d,
            Err(s) => return s,
        };
        let study = match study {
            SlStudy::Uniformity => Study::Uniformity,
            SlStudy::Limit => Study::Limit,
            SlStudy::Sector => Study::Sector,
            SlStudy::Validate => Study::Validate,
            SlStudy::CrossCheck => Study::CrossCheck,
        };
        match run_study(study, &(*config).inner, Path::new(dir)) {
            Ok(o) => {
                *failed = o.fail;
                if o.fail {
                    set_error(o.reasons.join("; "));
                }
                SlStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Solves the configured model with its seed family made compatible.
///
/// # Safety
/// `config` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_solve_full(config: *const SlConfig, out: *mut *mut SlSolution) -> SlStatus {
    non_null!(config, out);
    guard(|| {
        let cfg = &(*config).inner;
        let run = || -> stefan_limits::Result<SlSolution> {
            let params = cfg.model.params()?;
            let grids = cfg.model.grids()?;
            let (data, _) = make_compatible_data(&params, &grids, &cfg.model.seed_family.seeds(&grids))?;
            let (sol, _) = solve_full(&data, &params, &grids, &cfg.contour, &cfg.solver)?;
            Ok(SlSolution { grids, sol })
        };
        match run() {
            Ok(s) => {
                *out = Box::into_raw(Box::new(s));
                SlStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Node counts of the time, tangential and normal grids.
///
/// # Safety
/// `sol` must be a live handle; the outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sl_solution_dims(
    sol: *const SlSolution,
    n_t: *mut usize,
    n_x: *mut usize,
    n_y: *mut usize,
) -> SlStatus {
    non_null!(sol, n_t, n_x, n_y);
    let g = &(*sol).grids;
    *n_t = g.n_t();
    *n_x = g.n_x();
    *n_y = g.n_y();
    SlStatus::Ok
}

unsafe fn copy_out<'a>(values: impl ExactSizeIterator<Item = &'a f64>, buf: *mut f64, len: usize) -> SlStatus {
    if len < values.len() {
        set_error(format!("buffer holds {len} values, {} needed", values.len()));
        return SlStatus::BufferTooSmall;
    }
    for (i, v) in values.enumerate() {
        *buf.add(i) = *v;
    }
    SlStatus::Ok
}

/// Copies `ρ` row-major in `[t, x]`.
///
/// # Safety
/// `sol` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sl_solution_rho(sol: *const SlSolution, buf: *mut f64, len: usize) -> SlStatus {
    non_null!(sol, buf);
    copy_out((*sol).sol.rho.iter(), buf, len)
}

/// Copies `v` on one side, row-major in `[t, x, |y|]`.
///
/// # Safety
/// `sol` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sl_solution_v(sol: *const SlSolution, side: SlSide, buf: *mut f64, len: usize) -> SlStatus {
    non_null!(sol, buf);
    let v = &(*sol).sol.v;
    let field = match side {
        SlSide::Plus => &v.plus,
        SlSide::Minus => &v.minus,
    };
    copy_out(field.iter(), buf, len)
}

/// # Safety
/// `sol` must be null or a handle from [`sl_solve_full`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_solution_free(sol: *mut SlSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}
