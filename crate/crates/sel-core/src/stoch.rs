use crate::brownian::BrownianPath;
use crate::error::Result;
use crate::grid::Grid;
use crate::noise::NoiseSpec;
use crate::state::FieldState;

/// Configuration of the stochastic momentum update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochStepConfig {
    /// Euler-Maruyama substeps inside one splitting window (>= 1).
    pub substeps_per_interval: usize,
    /// Clamp m back into the noise support box after each substep. Keeps the
    /// box literally invariant; the continuous theory allows no escape but a
    /// discrete increment can overshoot by O(|dW|).
    pub clamp: bool,
}

impl Default for StochStepConfig {
    fn default() -> Self {
        StochStepConfig { substeps_per_interval: 4, clamp: true }
    }
}

/// Outcome of a stochastic leg: the state plus clamp accounting.
#[derive(Debug, Clone, Default)]
pub struct ClampLog {
    /// Number of cell-substep clamps applied.
    pub count: usize,
    /// Largest single clamp magnitude.
    pub max_magnitude: f64,
}

/// One Euler-Maruyama substep: rho is untouched, every interior cell gets
/// m += sigma(x_i, rho_i, m_i) * dW with the shared scalar increment (the
/// driving Wiener process is one-dimensional). End cells are left alone.
pub fn stoch_substep(
    state: &mut FieldState,
    dw: f64,
    noise: &NoiseSpec,
    grid: &Grid,
    clamp: bool,
    log: &mut ClampLog,
) {
    let n = state.n();
    let b = noise.m_bound();
    for i in 1..n - 1 {
        let s = noise.sigma(grid.x_centers[i], state.rho[i], state.m[i]);
        if s == 0.0 {
            continue;
        }
        let mut m_new = state.m[i] + s * dw;
        if clamp {
            let clamped = m_new.clamp(-b, b);
            if clamped != m_new {
                log.count += 1;
                log.max_magnitude = log.max_magnitude.max((m_new - clamped).abs());
                m_new = clamped;
            }
        }
        state.m[i] = m_new;
    }
}

/// Solution operator R(t, t_n): iterates `stoch_substep` over the increments
/// of `path` restricted to [t_n, t]. Ito convention: sigma is evaluated at
/// the pre-increment state. Only increments with timestamps below `t` are
/// consumed (no look-ahead).
pub fn apply_r(
    state: &FieldState,
    t_n: f64,
    t: f64,
    path: &BrownianPath,
    noise: &NoiseSpec,
    grid: &Grid,
    config: &StochStepConfig,
) -> Result<(FieldState, ClampLog)> {
    let mut out = state.clone();
    out.t = t;
    let mut log = ClampLog::default();
    if t <= t_n {
        return Ok((out, log));
    }
    let incs = path.slice(t_n, t)?;
    for &dw in incs {
        stoch_substep(&mut out, dw, noise, grid, config.clamp, &mut log);
    }
    Ok((out, log))
}
