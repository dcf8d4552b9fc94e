//! C ABI for `sfde`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_from_*`
//! functions and released by the matching `*_free`. Every fallible call
//! returns an [`SfdeStatus`]; on failure the message is kept per thread and
//! can be copied out with [`sfde_last_error`]. Outputs are written through
//! pointers only on success.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use sfde::coupling::{simulate_coupled, CoupledTrajectory, CouplingSpec, Measure};
use sfde::estimators::constants::{self, SearchGrid};
use sfde::models::{ModelDef, ModelSpec};
use sfde::rng::domain;
use sfde::segment::{Segment, TailMode};
use sfde::solver::{simulate_path, GaussianNoise, SolverConfig, Trajectory};
use sfde::SfdeError;

#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SfdeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Domain = 4,
    Numerical = 5,
    Io = 6,
    Usage = 7,
    OutOfRange = 8,
    Panic = 9,
}

#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SfdeTail {
    Constant = 0,
    Zero = 1,
}

#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SfdeMeasure {
    P = 0,
    Q = 1,
}

/// Result of `sfde_hamiltonian_constants`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SfdeHamiltonianConstants {
    pub p0: f64,
    pub alpha0: f64,
    pub log_lambda: f64,
    pub lambda: f64,
    pub mu: f64,
    pub threshold: f64,
    pub c_beta: f64,
}

pub struct SfdeModel(ModelSpec);
pub struct SfdeSegment(Segment);
pub struct SfdeTrajectory(Trajectory);
pub struct SfdeCoupled(CoupledTrajectory);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &SfdeError) -> SfdeStatus {
    match e {
        SfdeError::Config(_) | SfdeError::KernelRate { .. } | SfdeError::Json(_) => SfdeStatus::Config,
        SfdeError::Domain(_) => SfdeStatus::Domain,
        SfdeError::Usage(_) => SfdeStatus::Usage,
        SfdeError::Io { .. } | SfdeError::Csv(_) => SfdeStatus::Io,
        _ => SfdeStatus::Numerical,
    }
}

enum Fail {
    Null(&'static str),
    Utf8,
    Range(String),
    Lib(SfdeError),
}

impl From<SfdeError> for Fail {
    fn from(e: SfdeError) -> Self {
        Fail::Lib(e)
    }
}

/// Run `f`, catching panics and recording errors.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SfdeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SfdeStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            SfdeStatus::NullPointer
        }
        Ok(Err(Fail::Utf8)) => {
            set_error("string is not valid UTF-8".into());
            SfdeStatus::InvalidUtf8
        }
        Ok(Err(Fail::Range(m))) => {
            set_error(m);
            SfdeStatus::OutOfRange
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            SfdeStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a>(p: *mut f64, n: usize) -> Option<&'a mut [f64]> {
    if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts_mut(p, n))
    }
}

/// Copy the last error of this thread into `buf` (NUL-terminated, truncated
/// to `len`). Returns the full message length plus one, or 0 if no error has
/// been recorded.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn sfde_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sfde_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Build a model from its JSON definition.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfde_model_from_json(json: *const c_char, out: *mut *mut SfdeModel) -> SfdeStatus {
    guard(|| {
        if json.is_null() {
            return Err(Fail::Null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|_| Fail::Utf8)?;
        let model = ModelDef::from_json(text)?.build()?;
        put(out, Box::into_raw(Box::new(SfdeModel(model))), "out")
    })
}

/// # Safety
/// `model` must come from `sfde_model_from_json` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sfde_model_free(model: *mut SfdeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sfde_model_dim(model: *const SfdeModel, out: *mut usize) -> SfdeStatus {
    guard(|| put(out, get(model, "model")?.0.dim(), "out"))
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sfde_model_rate(model: *const SfdeModel, out: *mut f64) -> SfdeStatus {
    guard(|| put(out, get(model, "model")?.0.rate(), "out"))
}

/// Segment from `rows` rows of `dim` values; row `k` holds `ξ(-k·dt)`.
/// `tail` is an [`SfdeTail`] value.
///
/// # Safety
/// `values` must hold `dim * rows` doubles.
#[no_mangle]
pub unsafe extern "C" fn sfde_segment_new(
    dim: usize,
    dt: f64,
    values: *const f64,
    rows: usize,
    tail: i32,
    out: *mut *mut SfdeSegment,
) -> SfdeStatus {
    guard(|| {
        let n = dim.checked_mul(rows).ok_or_else(|| Fail::Range("dim * rows overflows".into()))?;
        let v = slice(values, n, "values")?.to_vec();
        let tail = match tail {
            t if t == SfdeTail::Constant as i32 => TailMode::Constant,
            t if t == SfdeTail::Zero as i32 => TailMode::Zero,
            t => return Err(Fail::Range(format!("unknown tail mode {t}"))),
        };
        let seg = Segment::new(dim, dt, v, tail)?;
        put(out, Box::into_raw(Box::new(SfdeSegment(seg))), "out")
    })
}

/// Constant segment over `steps` grid steps with a constant tail.
///
/// # Safety
/// `value` must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn sfde_segment_constant(
    value: *const f64,
    dim: usize,
    dt: f64,
    steps: usize,
    out: *mut *mut SfdeSegment,
) -> SfdeStatus {
    guard(|| {
        let v = slice(value, dim, "value")?;
        let seg = Segment::constant(v, dt, steps, TailMode::Constant)?;
        put(out, Box::into_raw(Box::new(SfdeSegment(seg))), "out")
    })
}

/// # Safety
/// `seg` must come from a segment constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sfde_segment_free(seg: *mut SfdeSegment) {
    if !seg.is_null() {
        drop(Box::from_raw(seg));
    }
}

/// `sup_{θ≤0} e^{rθ}|ξ(θ)|`, tail included.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sfde_weighted_norm(seg: *const SfdeSegment, rate: f64, out: *mut f64) -> SfdeStatus {
    guard(|| {
        if !(rate > 0.0) {
            return Err(SfdeError::Domain(format!("rate must be positive, got {rate}")).into());
        }
        put(out, get(seg, "seg")?.0.weighted_norm(rate), "out")
    })
}

fn solver_config(dt: f64, horizon: f64, seed: u64) -> SolverConfig {
    SolverConfig { dt, horizon, seed, ..Default::default() }
}

/// One Euler–Maruyama path with Gaussian noise from `seed`. Matches path 0
/// of the command-line `simulate`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sfde_simulate(
    model: *const SfdeModel,
    xi: *const SfdeSegment,
    dt: f64,
    horizon: f64,
    seed: u64,
    out: *mut *mut SfdeTrajectory,
) -> SfdeStatus {
    guard(|| {
        let m = &get(model, "model")?.0;
        let xi = &get(xi, "xi")?.0;
        let mut noise = GaussianNoise::new(seed, domain::SIMULATE, 0, dt);
        let tr = simulate_path(m, xi, &solver_config(dt, horizon, seed), &mut noise)?;
        put(out, Box::into_raw(Box::new(SfdeTrajectory(tr))), "out")
    })
}

/// # Safety
/// `tr` must come from `sfde_simulate` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sfde_trajectory_free(tr: *mut SfdeTrajectory) {
    if !tr.is_null() {
        drop(Box::from_raw(tr));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sfde_trajectory_len(tr: *const SfdeTrajectory, out: *mut usize) -> SfdeStatus {
    guard(|| put(out, get(tr, "trajectory")?.0.len(), "out"))
}

/// Nonzero if the path hit the stopping radius.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sfde_trajectory_stopped(tr: *const SfdeTrajectory, out: *mut i32) -> SfdeStatus {
    guard(|| put(out, get(tr, "trajectory")?.0.stopped as i32, "out"))
}

/// Row `index`: time, state (`dim` doubles) and running norm. Any output
/// pointer may be null.
///
/// # Safety
/// `x` must be null or hold the model dimension.
#[no_mangle]
pub unsafe extern "C" fn sfde_trajectory_row(
    tr: *const SfdeTrajectory,
    index: usize,
    t: *mut f64,
    x: *mut f64,
    norm: *mut f64,
) -> SfdeStatus {
    guard(|| {
        let tr = &get(tr, "trajectory")?.0;
        if index >= tr.len() {
            return Err(Fail::Range(format!("row {index} of {}", tr.len())));
        }
        if !t.is_null() {
            *t = tr.times[index];
        }
        if let Some(x) = slice_mut(x, tr.dim) {
            x.copy_from_slice(tr.state(index));
        }
        if !norm.is_null() {
            *norm = tr.norms[index];
        }
        Ok(())
    })
}

/// Coupled pair from `(ξ, η)`. A NaN `lambda` selects the model default;
/// `measure` is an [`SfdeMeasure`] value.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn sfde_couple(
    model: *const SfdeModel,
    xi: *const SfdeSegment,
    eta: *const SfdeSegment,
    lambda: f64,
    measure: i32,
    dt: f64,
    horizon: f64,
    seed: u64,
    out: *mut *mut SfdeCoupled,
) -> SfdeStatus {
    guard(|| {
        let m = &get(model, "model")?.0;
        let (xi, eta) = (&get(xi, "xi")?.0, &get(eta, "eta")?.0);
        let measure = match measure {
            m if m == SfdeMeasure::P as i32 => Measure::P,
            m if m == SfdeMeasure::Q as i32 => Measure::Q,
            m => return Err(Fail::Range(format!("unknown measure {m}"))),
        };
        let cs = CouplingSpec::new(m, if lambda.is_nan() { None } else { Some(lambda) }, measure)?;
        let mut noise = GaussianNoise::new(seed, domain::COUPLED, 0, dt);
        let tr = simulate_coupled(&cs, xi, eta, &solver_config(dt, horizon, seed), &mut noise)?;
        put(out, Box::into_raw(Box::new(SfdeCoupled(tr))), "out")
    })
}

/// # Safety
/// `c` must come from `sfde_couple` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sfde_coupled_free(c: *mut SfdeCoupled) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sfde_coupled_len(c: *const SfdeCoupled, out: *mut usize) -> SfdeStatus {
    guard(|| put(out, get(c, "coupled")?.0.len(), "out"))
}

/// Row `index`: time, both states, log-density and `‖X_t - Y_t‖_r`. Any
/// output pointer may be null.
///
/// # Safety
/// `x` and `y` must be null or hold the model dimension.
#[no_mangle]
pub unsafe extern "C" fn sfde_coupled_row(
    c: *const SfdeCoupled,
    index: usize,
    t: *mut f64,
    x: *mut f64,
    y: *mut f64,
    log_r: *mut f64,
    z_norm: *mut f64,
) -> SfdeStatus {
    guard(|| {
        let c = &get(c, "coupled")?.0;
        if index >= c.len() {
            return Err(Fail::Range(format!("row {index} of {}", c.len())));
        }
        if !t.is_null() {
            *t = c.times[index];
        }
        if let Some(x) = slice_mut(x, c.dim) {
            x.copy_from_slice(c.x_at(index));
        }
        if let Some(y) = slice_mut(y, c.dim) {
            y.copy_from_slice(c.y_at(index));
        }
        if !log_r.is_null() {
            *log_r = c.log_r[index];
        }
        if !z_norm.is_null() {
            *z_norm = c.z_norm[index];
        }
        Ok(())
    })
}

/// `ln Λ(p, α)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfde_log_lambda_p_alpha(p: f64, alpha: f64, out: *mut f64) -> SfdeStatus {
    guard(|| put(out, constants::log_lambda_p_alpha(p, alpha)?, "out"))
}

/// `Λ(p, α)`; may overflow to infinity where the logarithm is finite.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfde_lambda_p_alpha(p: f64, alpha: f64, out: *mut f64) -> SfdeStatus {
    guard(|| put(out, constants::lambda_p_alpha(p, alpha)?, "out"))
}

/// Minimiser of `Λ` over the default grid and the derived Hamiltonian
/// constants.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfde_hamiltonian_constants(
    l1: f64,
    l2: f64,
    beta: f64,
    r: f64,
    out: *mut SfdeHamiltonianConstants,
) -> SfdeStatus {
    guard(|| {
        let k = constants::hamiltonian_constants(l1, l2, beta, r, &SearchGrid::default())?;
        let v = SfdeHamiltonianConstants {
            p0: k.p0,
            alpha0: k.alpha0,
            log_lambda: k.log_lambda,
            lambda: k.lambda,
            mu: k.mu,
            threshold: k.threshold,
            c_beta: k.c_beta,
        };
        put(out, v, "out")
    })
}
