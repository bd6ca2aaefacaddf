use crate::error::{Result, SelError};
use crate::grid::Grid;
use crate::params::{ModelParams, DEFAULT_RHO_FLOOR};
use crate::state::FieldState;

/// Convective flux discretization. Rusanov (local Lax-Friedrichs) is the only
/// scheme; the identifier exists so configs can name it explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FluxScheme {
    #[default]
    Rusanov,
}

impl std::str::FromStr for FluxScheme {
    type Err = SelError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rusanov" => Ok(FluxScheme::Rusanov),
            other => Err(SelError::Config(format!("unknown flux scheme '{other}'"))),
        }
    }
}

/// Configuration of the deterministic viscous solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetSolverConfig {
    /// Courant number in (0, 0.9].
    pub cfl: f64,
    /// Vacuum floor for velocity reconstruction.
    pub rho_floor: f64,
    pub flux_scheme: FluxScheme,
    /// When set, substeps use exactly this dt (callers guarantee stability);
    /// used by refinement studies that need a dt proportional to tau.
    pub fixed_dt: Option<f64>,
}

impl Default for DetSolverConfig {
    fn default() -> Self {
        DetSolverConfig {
            cfl: 0.45,
            rho_floor: DEFAULT_RHO_FLOOR,
            flux_scheme: FluxScheme::Rusanov,
            fixed_dt: None,
        }
    }
}

impl DetSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return Err(SelError::ParamDomain(format!("cfl must be in (0, 0.9], got {}", self.cfl)));
        }
        Ok(())
    }
}

#[inline]
fn flux(rho: f64, m: f64, params: &ModelParams, floor: f64) -> (f64, f64) {
    let u = m / rho.max(floor);
    (m, m * u + params.p(rho))
}

/// Largest stable time step: cfl * min(dx / max(|u| + c), dx^2 / (2 eps)).
/// Returns +inf when no wave speeds and eps = 0.
pub fn stable_dt(state: &FieldState, grid: &Grid, params: &ModelParams, config: &DetSolverConfig) -> f64 {
    let mut speed = 0.0_f64;
    for i in 0..state.n() {
        let u = state.velocity(i, config.rho_floor).abs();
        let c = params.sound_speed(state.rho[i]);
        speed = speed.max(u + c);
    }
    let hyperbolic = if speed > 0.0 { grid.dx / speed } else { f64::INFINITY };
    let viscous =
        if params.epsilon > 0.0 { grid.dx * grid.dx / (2.0 * params.epsilon) } else { f64::INFINITY };
    config.cfl * hyperbolic.min(viscous)
}

/// One conservative explicit step: Rusanov convective flux + centered viscous
/// differences, damping on the momentum. Ghost cells mirror rho (Neumann) and
/// reflect m (Dirichlet zero at the faces), which zeroes both boundary fluxes
/// exactly, so total mass telescopes to roundoff.
pub fn det_step(
    state: &FieldState,
    dt: f64,
    grid: &Grid,
    params: &ModelParams,
    config: &DetSolverConfig,
) -> Result<FieldState> {
    let n = state.n();
    debug_assert_eq!(n, grid.n);
    let dx = grid.dx;
    let floor = config.rho_floor;

    let rho_g = |i: isize| -> f64 {
        if i < 0 {
            state.rho[0]
        } else if i >= n as isize {
            state.rho[n - 1]
        } else {
            state.rho[i as usize]
        }
    };
    let m_g = |i: isize| -> f64 {
        if i < 0 {
            -state.m[0]
        } else if i >= n as isize {
            -state.m[n - 1]
        } else {
            state.m[i as usize]
        }
    };

    // Rusanov flux at interface i-1/2 for i in 0..=n
    let iface = |i: isize| -> (f64, f64) {
        let (rl, ml) = (rho_g(i - 1), m_g(i - 1));
        let (rr, mr) = (rho_g(i), m_g(i));
        let (f1l, f2l) = flux(rl, ml, params, floor);
        let (f1r, f2r) = flux(rr, mr, params, floor);
        let al = (ml / rl.max(floor)).abs() + params.sound_speed(rl);
        let ar = (mr / rr.max(floor)).abs() + params.sound_speed(rr);
        let a = al.max(ar);
        (0.5 * (f1l + f1r) - 0.5 * a * (rr - rl), 0.5 * (f2l + f2r) - 0.5 * a * (mr - ml))
    };

    let lam = dt / dx;
    let mu = dt * params.epsilon / (dx * dx);
    let mut rho = Vec::with_capacity(n);
    let mut m = Vec::with_capacity(n);
    let mut left = iface(0);
    for i in 0..n {
        let right = iface(i as isize + 1);
        let ii = i as isize;
        let visc_r = mu * (rho_g(ii - 1) - 2.0 * state.rho[i] + rho_g(ii + 1));
        let visc_m = mu * (m_g(ii - 1) - 2.0 * state.m[i] + m_g(ii + 1));
        let r_new = state.rho[i] - lam * (right.0 - left.0) + visc_r;
        let m_new = state.m[i] - lam * (right.1 - left.1) + visc_m - dt * params.alpha * state.m[i];
        if !r_new.is_finite() || !m_new.is_finite() {
            return Err(SelError::Blowup {
                cell: i,
                t: state.t,
                what: format!("det_step produced (rho={r_new}, m={m_new})"),
            });
        }
        // Rusanov + viscosity keeps rho nonnegative at the stable dt; clamp
        // FP dust so powf never sees -0-adjacent values.
        rho.push(r_new.max(0.0));
        m.push(m_new);
        left = right;
    }
    Ok(FieldState { rho, m, t: state.t + dt })
}

/// Semigroup S(elapsed): substeps `det_step` until exactly `elapsed` has
/// passed, shortening the final step.
pub fn apply_s(
    state: &FieldState,
    elapsed: f64,
    grid: &Grid,
    params: &ModelParams,
    config: &DetSolverConfig,
) -> Result<FieldState> {
    if elapsed < 0.0 {
        return Err(SelError::Precondition(format!("elapsed must be >= 0, got {elapsed}")));
    }
    if elapsed == 0.0 {
        return Ok(state.clone());
    }
    let mut s = state.clone();
    let mut remaining = elapsed;
    // guard against FP dust left over from repeated subtraction
    let tiny = 1e-14 * elapsed;
    while remaining > tiny {
        let limit = match config.fixed_dt {
            Some(dt) => dt,
            None => stable_dt(&s, grid, params, config),
        };
        let dt = limit.min(remaining);
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SelError::Precondition(format!("apply_s: degenerate step dt = {dt}")));
        }
        s = det_step(&s, dt, grid, params, config)?;
        remaining -= dt;
    }
    s.t = state.t + elapsed;
    Ok(s)
}

/// Riemann invariants w = u + rho^theta, z = u - rho^theta per cell, plus
/// (max w, min z).
pub fn compute_invariants(
    state: &FieldState,
    params: &ModelParams,
    rho_floor: f64,
) -> (Vec<f64>, Vec<f64>, f64, f64) {
    let n = state.n();
    let mut w = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut w_max = f64::NEG_INFINITY;
    let mut z_min = f64::INFINITY;
    for i in 0..n {
        let u = if state.rho[i] <= 0.0 && state.m[i] == 0.0 {
            0.0
        } else {
            state.m[i] / state.rho[i].max(rho_floor)
        };
        let rt = state.rho[i].powf(params.theta);
        let wi = u + rt;
        let zi = u - rt;
        w_max = w_max.max(wi);
        z_min = z_min.min(zi);
        w.push(wi);
        z.push(zi);
    }
    (w, z, w_max, z_min)
}
