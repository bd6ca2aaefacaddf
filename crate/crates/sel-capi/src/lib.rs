//! C ABI for the stochastic Euler simulation lab.
//!
//! Handles are opaque pointers created and destroyed by this library; every
//! fallible call returns a [`SelStatus`] code and leaves a human-readable
//! message retrievable with [`sel_last_error_message`]. The header
//! `include/sel.h` is generated by cbindgen at build time.

use sel_core::brownian::BrownianPath;
use sel_core::config::RunConfig;
use sel_core::det::{apply_s, compute_invariants, DetSolverConfig};
use sel_core::ensemble::derive_seed;
use sel_core::error::SelError;
use sel_core::grid::Grid;
use sel_core::longtime::fit_decay;
use sel_core::noise::NoiseSpec;
use sel_core::params::{make_params, ModelParams};
use sel_core::splitting::SplitConfig;
use sel_core::state::FieldState;
use sel_core::stoch::{apply_r, StochStepConfig};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalBlowup = 3,
    IoError = 4,
    OutOfRange = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let s = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

fn status_of(err: &SelError) -> SelStatus {
    match err {
        SelError::ParamDomain(_) | SelError::Precondition(_) | SelError::Config(_)
        | SelError::Alignment(_) => SelStatus::InvalidArgument,
        SelError::Vacuum { .. } | SelError::Blowup { .. } => SelStatus::NumericalBlowup,
        SelError::PathExhausted { .. } => SelStatus::OutOfRange,
        SelError::Io(_) => SelStatus::IoError,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SelStatus, String)>) -> SelStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SelStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SelStatus::Panic
        }
    }
}

fn fail(err: SelError) -> (SelStatus, String) {
    (status_of(&err), err.to_string())
}

/// Message describing the most recent error on this thread. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sel_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn sel_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Opaque model-parameter handle.
pub struct SelParams {
    inner: ModelParams,
}

/// Creates model parameters; theta and kappa are derived from gamma.
///
/// # Safety
/// `out` must be a valid pointer to a pointer slot.
#[no_mangle]
pub unsafe extern "C" fn sel_params_new(
    gamma: f64,
    alpha: f64,
    epsilon: f64,
    a0: f64,
    m1: f64,
    m2: f64,
    out: *mut *mut SelParams,
) -> SelStatus {
    guard(|| {
        if out.is_null() {
            return Err((SelStatus::NullPointer, "out is null".into()));
        }
        let inner = make_params(gamma, alpha, epsilon, a0, m1, m2).map_err(fail)?;
        unsafe { *out = Box::into_raw(Box::new(SelParams { inner })) };
        Ok(())
    })
}

/// Frees a parameter handle. Null is a no-op.
///
/// # Safety
/// `p` must have come from `sel_params_new` and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn sel_params_free(p: *mut SelParams) {
    if !p.is_null() {
        drop(unsafe { Box::from_raw(p) });
    }
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, (SelStatus, String)> {
    unsafe { p.as_ref() }.ok_or((SelStatus::NullPointer, "null handle".into()))
}

/// Writes theta = (gamma - 1) / 2.
///
/// # Safety
/// `p` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sel_params_theta(p: *const SelParams, out: *mut f64) -> SelStatus {
    guard(|| {
        let p = unsafe { deref(p) }?;
        if out.is_null() {
            return Err((SelStatus::NullPointer, "out is null".into()));
        }
        unsafe { *out = p.inner.theta };
        Ok(())
    })
}

/// Writes kappa = theta^2 / gamma.
///
/// # Safety
/// `p` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sel_params_kappa(p: *const SelParams, out: *mut f64) -> SelStatus {
    guard(|| {
        let p = unsafe { deref(p) }?;
        if out.is_null() {
            return Err((SelStatus::NullPointer, "out is null".into()));
        }
        unsafe { *out = p.inner.kappa };
        Ok(())
    })
}

/// Pressure p(rho) = kappa rho^gamma; rejects negative rho.
///
/// # Safety
/// `p` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sel_pressure(p: *const SelParams, rho: f64, out: *mut f64) -> SelStatus {
    guard(|| {
        let p = unsafe { deref(p) }?;
        if out.is_null() {
            return Err((SelStatus::NullPointer, "out is null".into()));
        }
        let v = p.inner.pressure(rho).map_err(fail)?;
        unsafe { *out = v };
        Ok(())
    })
}

/// Opaque simulation handle: one splitting trajectory advanced window by
/// window.
pub struct SelSimulation {
    grid: Grid,
    params: ModelParams,
    noise: NoiseSpec,
    det_cfg: DetSolverConfig,
    stoch_cfg: StochStepConfig,
    path: BrownianPath,
    tau: f64,
    n_windows: usize,
    window: usize,
    state: FieldState,
}

/// Builds a simulation from the plain-text key=value config format used by
/// the `sel` CLI. The Brownian path uses seed slot 0 of the configured base
/// seed.
///
/// # Safety
/// `config_text` must be a NUL-terminated string and `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn sel_sim_new_from_config(
    config_text: *const c_char,
    out: *mut *mut SelSimulation,
) -> SelStatus {
    guard(|| {
        if config_text.is_null() || out.is_null() {
            return Err((SelStatus::NullPointer, "null argument".into()));
        }
        let text = unsafe { CStr::from_ptr(config_text) }
            .to_str()
            .map_err(|_| (SelStatus::InvalidArgument, "config is not UTF-8".into()))?;
        let cfg = RunConfig::parse(text).map_err(fail)?;
        let params = cfg.model_params().map_err(fail)?;
        let grid = cfg.grid().map_err(fail)?;
        let noise = cfg.noise();
        let split: SplitConfig = cfg.split().map_err(fail)?;
        let state = cfg.initial_state(&grid, &params).map_err(fail)?;
        let tau = split.tau();
        let dt = tau / cfg.substeps as f64;
        let count = (cfg.t_final / dt).round() as usize;
        let path = BrownianPath::sample(derive_seed(cfg.seed, 0), dt, count).map_err(fail)?;
        let sim = SelSimulation {
            grid,
            params,
            noise,
            det_cfg: cfg.det_cfg(),
            stoch_cfg: cfg.stoch_cfg(),
            path,
            tau,
            n_windows: cfg.n_windows,
            window: 0,
            state,
        };
        unsafe { *out = Box::into_raw(Box::new(sim)) };
        Ok(())
    })
}

/// Frees a simulation handle. Null is a no-op.
///
/// # Safety
/// `sim` must have come from `sel_sim_new_from_config`.
#[no_mangle]
pub unsafe extern "C" fn sel_sim_free(sim: *mut SelSimulation) {
    if !sim.is_null() {
        drop(unsafe { Box::from_raw(sim) });
    }
}

/// Number of grid cells.
///
/// # Safety
/// `sim` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sel_sim_n_cells(sim: *const SelSimulation, out: *mut usize) -> SelStatus {
    guard(|| {
        let sim = unsafe { deref(sim) }?;
        if out.is_null() {
            return Err((SelStatus::NullPointer, "out is null".into()));
        }
        unsafe { *out = sim.grid.n };
        Ok(())
    })
}

/// Current simulation time.
///
/// # Safety
/// `sim` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sel_sim_time(sim: *const SelSimulation, out: *mut f64) -> SelStatus {
    guard(|| {
        let sim = unsafe { deref(sim) }?;
        if out.is_null() {
            return Err((SelStatus::NullPointer, "out is null".into()));
        }
        unsafe { *out = sim.state.t };
        Ok(())
    })
}

/// Advances the splitting scheme by `k` windows (deterministic leg then
/// stochastic leg per window). Errors with SEL_STATUS_OUT_OF_RANGE past
/// the configured horizon.
///
/// # Safety
/// `sim` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sel_sim_advance_windows(sim: *mut SelSimulation, k: usize) -> SelStatus {
    guard(|| {
        let sim =
            unsafe { sim.as_mut() }.ok_or((SelStatus::NullPointer, "null handle".into()))?;
        if sim.window + k > sim.n_windows {
            return Err((
                SelStatus::OutOfRange,
                format!(
                    "advance past horizon: window {} + {k} > {}",
                    sim.window, sim.n_windows
                ),
            ));
        }
        for _ in 0..k {
            let t_n = sim.window as f64 * sim.tau;
            let t_np1 = (sim.window + 1) as f64 * sim.tau;
            let ubar =
                apply_s(&sim.state, sim.tau, &sim.grid, &sim.params, &sim.det_cfg).map_err(fail)?;
            let (next, _) =
                apply_r(&ubar, t_n, t_np1, &sim.path, &sim.noise, &sim.grid, &sim.stoch_cfg)
                    .map_err(fail)?;
            sim.state = next;
            sim.window += 1;
        }
        Ok(())
    })
}

/// Copies the cell-center density and momentum into caller-owned buffers of
/// length `len` (= number of cells).
///
/// # Safety
/// `rho_out` and `m_out` must point to writable buffers of at least `len`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn sel_sim_copy_state(
    sim: *const SelSimulation,
    rho_out: *mut f64,
    m_out: *mut f64,
    len: usize,
) -> SelStatus {
    guard(|| {
        let sim = unsafe { deref(sim) }?;
        if rho_out.is_null() || m_out.is_null() {
            return Err((SelStatus::NullPointer, "output buffer is null".into()));
        }
        if len != sim.grid.n {
            return Err((
                SelStatus::InvalidArgument,
                format!("buffer length {len} != {} cells", sim.grid.n),
            ));
        }
        unsafe {
            std::ptr::copy_nonoverlapping(sim.state.rho.as_ptr(), rho_out, len);
            std::ptr::copy_nonoverlapping(sim.state.m.as_ptr(), m_out, len);
        }
        Ok(())
    })
}

/// Discrete total mass of the current state.
///
/// # Safety
/// `sim` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sel_sim_mass(sim: *const SelSimulation, out: *mut f64) -> SelStatus {
    guard(|| {
        let sim = unsafe { deref(sim) }?;
        if out.is_null() {
            return Err((SelStatus::NullPointer, "out is null".into()));
        }
        unsafe { *out = sim.state.mass(&sim.grid) };
        Ok(())
    })
}

/// Riemann-invariant envelope of the current state: max w and min z.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sel_sim_invariants(
    sim: *const SelSimulation,
    out_max_w: *mut f64,
    out_min_z: *mut f64,
) -> SelStatus {
    guard(|| {
        let sim = unsafe { deref(sim) }?;
        if out_max_w.is_null() || out_min_z.is_null() {
            return Err((SelStatus::NullPointer, "out is null".into()));
        }
        let (_, _, max_w, min_z) =
            compute_invariants(&sim.state, &sim.params, sim.det_cfg.rho_floor);
        unsafe {
            *out_max_w = max_w;
            *out_min_z = min_z;
        }
        Ok(())
    })
}

/// Per-path seed derivation (splitmix64 finalizer of base XOR
/// (index+1) * 0x9E3779B97F4A7C15). Pure.
#[no_mangle]
pub extern "C" fn sel_derive_seed(base_seed: u64, path_index: u64) -> u64 {
    derive_seed(base_seed, path_index)
}

/// Least-squares exponential fit of (t, v) samples on [t_lo, t_hi]:
/// v ~ prefactor * exp(-rate * t). All values inside the window must be
/// positive.
///
/// # Safety
/// `ts` and `vs` must hold `len` doubles; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sel_fit_decay(
    ts: *const f64,
    vs: *const f64,
    len: usize,
    t_lo: f64,
    t_hi: f64,
    out_rate: *mut f64,
    out_prefactor: *mut f64,
    out_r_squared: *mut f64,
) -> SelStatus {
    guard(|| {
        if ts.is_null() || vs.is_null() || out_rate.is_null() || out_prefactor.is_null()
            || out_r_squared.is_null()
        {
            return Err((SelStatus::NullPointer, "null argument".into()));
        }
        let ts = unsafe { std::slice::from_raw_parts(ts, len) };
        let vs = unsafe { std::slice::from_raw_parts(vs, len) };
        let series: Vec<(f64, f64)> = ts.iter().cloned().zip(vs.iter().cloned()).collect();
        let fit = fit_decay(&series, (t_lo, t_hi)).map_err(fail)?;
        unsafe {
            *out_rate = fit.rate;
            *out_prefactor = fit.prefactor;
            *out_r_squared = fit.r_squared;
        }
        Ok(())
    })
}
