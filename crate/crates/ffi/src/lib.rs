//! C ABI over `vortexlab`.
//!
//! Objects are opaque handles created by `vl_*_new` and released by the
//! matching `vl_*_free`. Every fallible call returns a [`VlStatus`]; the
//! message of the last failure on the calling thread is available from
//! [`vl_last_error`]. Panics are caught at the boundary and reported as
//! `VL_STATUS_PANIC`.
//!
//! Complex fields cross the boundary as interleaved `(re, im)` doubles,
//! node `(i, j)` at offset `2 (j nx + i)`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use vortexlab::grid::{ComplexField, Params};
use vortexlab::normal_form::{hopf_orbit, NormalFormData};
use vortexlab::spectral::{find_ic, leading_eigenpairs_with, EigenOptions, Operator};
use vortexlab::tdgl::{SimState, Simulator};
use vortexlab::vortex_law::{classify_scenario, extract_beta, BetaProfile, Scenario};
use vortexlab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParams = 2,
    SolverFailure = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VlScenario {
    DownwardHump = 0,
    UpwardHump = 1,
    Monotone = 2,
    MinAndMax = 3,
    Other = 4,
}

/// Geometry and drive. `delta = 0` disables the leads.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct VlParams {
    pub half_width: f64,
    pub half_height: f64,
    pub delta: f64,
    pub field: f64,
    pub current: f64,
    pub gamma: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct VlNormalFormInfo {
    pub lambda1_re: f64,
    pub lambda1_im: f64,
    pub n4_re: f64,
    pub n4_im: f64,
    /// `Im n4 / Re n4`.
    pub gamma: f64,
    pub supercritical: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct VlOrbit {
    pub amplitude: f64,
    pub chi: f64,
    pub period: f64,
}

pub struct VlOperator(Operator);

pub struct VlNormalForm(NormalFormData);

pub struct VlBeta(BetaProfile);

pub struct VlSimulator {
    sim: Simulator,
    state: Option<SimState>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

fn status_of(e: &Error) -> VlStatus {
    match e {
        Error::InvalidParams { .. } | Error::GridTooCoarse(_) | Error::ShapeMismatch { .. } => {
            VlStatus::InvalidParams
        }
        _ => VlStatus::SolverFailure,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (VlStatus, String)>) -> VlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VlStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            VlStatus::Panic
        }
    }
}

fn lib<T>(r: vortexlab::Result<T>) -> Result<T, (VlStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (VlStatus, String) {
    (VlStatus::NullPointer, "null pointer argument".into())
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, (VlStatus, String)> {
    p.as_ref().ok_or_else(null)
}

fn params(p: &VlParams) -> Params {
    Params {
        half_width: p.half_width,
        half_height: p.half_height,
        lead_half_width: p.delta,
        field: p.field,
        current: p.current,
        gamma: p.gamma,
    }
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn vl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// `L = 1`, `K = 2/3`, `delta = 4/15`, no field or current.
#[no_mangle]
pub extern "C" fn vl_params_canonical() -> VlParams {
    let p = Params::canonical();
    VlParams {
        half_width: p.half_width,
        half_height: p.half_height,
        delta: p.lead_half_width,
        field: p.field,
        current: p.current,
        gamma: p.gamma,
    }
}

/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn vl_operator_new(
    params: *const VlParams,
    nx: usize,
    ny: usize,
    out: *mut *mut VlOperator,
) -> VlStatus {
    guard(|| {
        let p = deref(params)?;
        if out.is_null() {
            return Err(null());
        }
        let op = lib(Operator::new(&self::params(p), nx, ny))?;
        *out = Box::into_raw(Box::new(VlOperator(op)));
        Ok(())
    })
}

/// # Safety
/// `op` must come from `vl_operator_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vl_operator_free(op: *mut VlOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Writes the `k` leading eigenvalues (by real part) to `re[0..k]`, `im[0..k]`.
///
/// # Safety
/// `re` and `im` must hold `k` doubles.
#[no_mangle]
pub unsafe extern "C" fn vl_operator_eigenvalues(
    op: *const VlOperator,
    k: usize,
    re: *mut f64,
    im: *mut f64,
) -> VlStatus {
    guard(|| {
        let op = &deref(op)?.0;
        if re.is_null() || im.is_null() {
            return Err(null());
        }
        if k == 0 {
            return Err((VlStatus::InvalidParams, "k must be >= 1".into()));
        }
        let pairs = lib(leading_eigenpairs_with(op, k, &EigenOptions::default(), &[]))?;
        for (q, p) in pairs.iter().take(k).enumerate() {
            *re.add(q) = p.lambda.re;
            *im.add(q) = p.lambda.im;
        }
        Ok(())
    })
}

/// Critical current in `[lo, hi]` for the geometry and field of `params`.
///
/// # Safety
/// `params` and `ic` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn vl_find_ic(
    params: *const VlParams,
    nx: usize,
    ny: usize,
    lo: f64,
    hi: f64,
    ic: *mut f64,
) -> VlStatus {
    guard(|| {
        let p = deref(params)?;
        if ic.is_null() {
            return Err(null());
        }
        let r = lib(find_ic(&self::params(p), nx, ny, (lo, hi), &EigenOptions::default()))?;
        *ic = r.ic;
        Ok(())
    })
}

/// # Safety
/// `op` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn vl_normal_form_new(
    op: *const VlOperator,
    out: *mut *mut VlNormalForm,
) -> VlStatus {
    guard(|| {
        let op = &deref(op)?.0;
        if out.is_null() {
            return Err(null());
        }
        let nf = lib(NormalFormData::compute(op, &EigenOptions::default()))?;
        *out = Box::into_raw(Box::new(VlNormalForm(nf)));
        Ok(())
    })
}

/// # Safety
/// `nf` must come from `vl_normal_form_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vl_normal_form_free(nf: *mut VlNormalForm) {
    if !nf.is_null() {
        drop(Box::from_raw(nf));
    }
}

/// # Safety
/// `nf` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn vl_normal_form_info(
    nf: *const VlNormalForm,
    out: *mut VlNormalFormInfo,
) -> VlStatus {
    guard(|| {
        let nf = &deref(nf)?.0;
        let out = out.as_mut().ok_or_else(null)?;
        *out = VlNormalFormInfo {
            lambda1_re: nf.lambda1.re,
            lambda1_im: nf.lambda1.im,
            n4_re: nf.n4.re,
            n4_im: nf.n4.im,
            gamma: nf.gamma_ratio,
            supercritical: nf.supercritical,
        };
        Ok(())
    })
}

/// Periodic orbit at `Gamma = Re lambda_1 + eps`.
///
/// # Safety
/// `nf` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn vl_hopf_orbit(
    nf: *const VlNormalForm,
    eps: f64,
    out: *mut VlOrbit,
) -> VlStatus {
    guard(|| {
        let nf = &deref(nf)?.0;
        let out = out.as_mut().ok_or_else(null)?;
        let o = lib(hopf_orbit(nf, eps))?;
        *out = VlOrbit { amplitude: o.amplitude, chi: o.chi, period: o.period };
        Ok(())
    })
}

/// Center-line phase profile of `u1` from the operator the normal form was
/// computed on.
///
/// # Safety
/// `op`, `nf` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn vl_beta_new(
    op: *const VlOperator,
    nf: *const VlNormalForm,
    out: *mut *mut VlBeta,
) -> VlStatus {
    guard(|| {
        let op = &deref(op)?.0;
        let nf = &deref(nf)?.0;
        if out.is_null() {
            return Err(null());
        }
        let b = lib(extract_beta(op.grid(), &nf.u1))?;
        *out = Box::into_raw(Box::new(VlBeta(b)));
        Ok(())
    })
}

/// # Safety
/// `beta` must come from `vl_beta_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vl_beta_free(beta: *mut VlBeta) {
    if !beta.is_null() {
        drop(Box::from_raw(beta));
    }
}

/// Number of samples; 0 for a null handle.
///
/// # Safety
/// `beta` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn vl_beta_len(beta: *const VlBeta) -> usize {
    beta.as_ref().map_or(0, |b| b.0.len())
}

/// Copies the samples into `y[0..len]` and `beta[0..len]`.
///
/// # Safety
/// `y` and `values` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn vl_beta_copy(
    beta: *const VlBeta,
    y: *mut f64,
    values: *mut f64,
    len: usize,
) -> VlStatus {
    guard(|| {
        let b = &deref(beta)?.0;
        if y.is_null() || values.is_null() {
            return Err(null());
        }
        if len < b.len() {
            return Err((VlStatus::BufferTooSmall, format!("need {} samples, got {len}", b.len())));
        }
        std::ptr::copy_nonoverlapping(b.y.as_ptr(), y, b.len());
        std::ptr::copy_nonoverlapping(b.beta.as_ptr(), values, b.len());
        Ok(())
    })
}

/// # Safety
/// `beta` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn vl_beta_scenario(beta: *const VlBeta, out: *mut VlScenario) -> VlStatus {
    guard(|| {
        let b = &deref(beta)?.0;
        let out = out.as_mut().ok_or_else(null)?;
        *out = match classify_scenario(b) {
            Scenario::DownwardHump => VlScenario::DownwardHump,
            Scenario::UpwardHump => VlScenario::UpwardHump,
            Scenario::Monotone => VlScenario::Monotone,
            Scenario::MinAndMax => VlScenario::MinAndMax,
            Scenario::Other => VlScenario::Other,
        };
        Ok(())
    })
}

/// TDGL stepper; the state starts at `psi = 0` until set.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn vl_simulator_new(
    params: *const VlParams,
    nx: usize,
    ny: usize,
    dt: f64,
    out: *mut *mut VlSimulator,
) -> VlStatus {
    guard(|| {
        let p = deref(params)?;
        if out.is_null() {
            return Err(null());
        }
        let sim = lib(Simulator::new(&self::params(p), nx, ny, dt))?;
        *out = Box::into_raw(Box::new(VlSimulator { sim, state: None }));
        Ok(())
    })
}

/// # Safety
/// `sim` must come from `vl_simulator_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vl_simulator_free(sim: *mut VlSimulator) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Resets time to 0 with `psi` from `len = 2 nx ny` interleaved doubles.
///
/// # Safety
/// `psi` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn vl_simulator_set_state(
    sim: *mut VlSimulator,
    psi: *const f64,
    len: usize,
) -> VlStatus {
    guard(|| {
        let s = sim.as_mut().ok_or_else(null)?;
        if psi.is_null() {
            return Err(null());
        }
        let n = s.sim.grid().len();
        if len != 2 * n {
            return Err((VlStatus::InvalidParams, format!("need {} doubles, got {len}", 2 * n)));
        }
        let raw = std::slice::from_raw_parts(psi, len);
        let data = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let field = lib(ComplexField::from_vec(s.sim.grid(), data))?;
        s.state = Some(lib(s.sim.init(&field))?);
        Ok(())
    })
}

/// Advances `steps` time steps.
///
/// # Safety
/// `sim` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vl_simulator_step(sim: *mut VlSimulator, steps: usize) -> VlStatus {
    guard(|| {
        let s = sim.as_mut().ok_or_else(null)?;
        let mut state = match s.state.take() {
            Some(st) => st,
            None => lib(s.sim.init(&ComplexField::zeros(s.sim.grid())))?,
        };
        for _ in 0..steps {
            match s.sim.step(&state) {
                Ok(next) => state = next,
                Err(e) => {
                    s.state = Some(state);
                    return Err((status_of(&e), e.to_string()));
                }
            }
        }
        s.state = Some(state);
        Ok(())
    })
}

/// Copies `psi` into `out[0..len]` (interleaved) and the time into `t`.
///
/// # Safety
/// `out` must hold `len` doubles; `t` may be null.
#[no_mangle]
pub unsafe extern "C" fn vl_simulator_state(
    sim: *const VlSimulator,
    out: *mut f64,
    len: usize,
    t: *mut f64,
) -> VlStatus {
    guard(|| {
        let s = deref(sim)?;
        if out.is_null() {
            return Err(null());
        }
        let n = s.sim.grid().len();
        if len < 2 * n {
            return Err((VlStatus::BufferTooSmall, format!("need {} doubles, got {len}", 2 * n)));
        }
        let zero = ComplexField::zeros(s.sim.grid());
        let (psi, time) = match &s.state {
            Some(st) => (&st.psi, st.t),
            None => (&zero, 0.0),
        };
        for (q, v) in psi.values().iter().enumerate() {
            *out.add(2 * q) = v.re;
            *out.add(2 * q + 1) = v.im;
        }
        if !t.is_null() {
            *t = time;
        }
        Ok(())
    })
}
