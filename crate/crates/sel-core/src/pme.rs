use crate::error::{Result, SelError};
use crate::grid::Grid;
use crate::params::ModelParams;
use crate::splitting::Trajectory;

/// Porous-medium density field.
#[derive(Debug, Clone, PartialEq)]
pub struct PmeState {
    pub rho: Vec<f64>,
    pub t: f64,
}

impl PmeState {
    pub fn new(rho: Vec<f64>, t: f64) -> Result<Self> {
        for (i, &r) in rho.iter().enumerate() {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(SelError::Precondition(format!("pme rho[{i}] = {r} inadmissible")));
            }
        }
        Ok(PmeState { rho, t })
    }

    pub fn mass(&self, grid: &Grid) -> f64 {
        self.rho.iter().sum::<f64>() * grid.dx
    }
}

/// Largest stable explicit step dx^2 / (2 max p'(rho)).
pub fn pme_stable_dt(state: &PmeState, grid: &Grid, params: &ModelParams) -> f64 {
    let dpmax = state.rho.iter().map(|&r| params.dp(r)).fold(0.0, f64::max);
    if dpmax > 0.0 {
        grid.dx * grid.dx / (2.0 * dpmax)
    } else {
        f64::INFINITY
    }
}

/// Explicit conservative step of d_t rho = d_x^2 p(rho) with Neumann ghosts
/// on the pressure itself (ghost copies the interior p value). The update is
/// monotone at the stable dt, so ordered initial data stay ordered.
pub fn pme_step(state: &PmeState, dt: f64, grid: &Grid, params: &ModelParams) -> Result<PmeState> {
    let limit = pme_stable_dt(state, grid, params);
    if dt > limit * (1.0 + 1e-12) {
        return Err(SelError::Precondition(format!(
            "pme_step: dt = {dt} exceeds the stable bound {limit}"
        )));
    }
    let n = state.rho.len();
    let p: Vec<f64> = state.rho.iter().map(|&r| params.p(r)).collect();
    let mu = dt / (grid.dx * grid.dx);
    let mut rho = Vec::with_capacity(n);
    for i in 0..n {
        let pl = if i == 0 { p[0] } else { p[i - 1] };
        let pr = if i == n - 1 { p[n - 1] } else { p[i + 1] };
        let r_new = state.rho[i] + mu * (pl - 2.0 * p[i] + pr);
        if !r_new.is_finite() {
            return Err(SelError::Blowup { cell: i, t: state.t, what: "pme_step non-finite".into() });
        }
        rho.push(r_new.max(0.0));
    }
    Ok(PmeState { rho, t: state.t + dt })
}

/// Integrates the PME to `t_target` with CFL-limited substeps (factor of the
/// stable bound), shortening the final step.
pub fn pme_advance(
    state: &PmeState,
    t_target: f64,
    grid: &Grid,
    params: &ModelParams,
    safety: f64,
) -> Result<PmeState> {
    let mut s = state.clone();
    while s.t < t_target - 1e-14 * t_target.max(1.0) {
        let dt = (safety * pme_stable_dt(&s, grid, params)).min(t_target - s.t);
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SelError::Precondition(format!("pme_advance: degenerate dt = {dt}")));
        }
        s = pme_step(&s, dt, grid, params)?;
    }
    s.t = t_target;
    Ok(s)
}

/// Darcy momentum m = -(1/alpha) d_x p(rho) by centered differences; end
/// cells are zero, the discrete Neumann datum.
pub fn darcy_momentum(state: &PmeState, grid: &Grid, params: &ModelParams) -> Vec<f64> {
    let n = state.rho.len();
    let p: Vec<f64> = state.rho.iter().map(|&r| params.p(r)).collect();
    let mut m = vec![0.0; n];
    for i in 1..n - 1 {
        m[i] = -(p[i + 1] - p[i - 1]) / (2.0 * grid.dx * params.alpha);
    }
    m
}

/// Per-time comparison series int (rho_IE - rho_PME)^2 + (m_IE - m_PME)^2 dx.
/// The PME trajectory is represented by (time, PmeState) pairs sharing the
/// grid and record times of the Euler trajectory.
pub fn compare_euler_pme(
    euler: &Trajectory,
    pme: &[(f64, PmeState)],
    grid: &Grid,
    params: &ModelParams,
) -> Result<Vec<(f64, f64)>> {
    if euler.snapshots.len() != pme.len() {
        return Err(SelError::Alignment(format!(
            "euler has {} snapshots, pme {}",
            euler.snapshots.len(),
            pme.len()
        )));
    }
    let mut out = Vec::with_capacity(pme.len());
    for ((te, se), (tp, sp)) in euler.snapshots.iter().zip(pme) {
        if (te - tp).abs() > 1e-10 {
            return Err(SelError::Alignment(format!("record times differ: {te} vs {tp}")));
        }
        if se.n() != sp.rho.len() || se.n() != grid.n {
            return Err(SelError::Alignment("grid mismatch between euler and pme".into()));
        }
        let m_pme = darcy_momentum(sp, grid, params);
        let mut acc = 0.0;
        for i in 0..grid.n {
            let dr = se.rho[i] - sp.rho[i];
            let dm = se.m[i] - m_pme[i];
            acc += dr * dr + dm * dm;
        }
        out.push((*te, acc * grid.dx));
    }
    Ok(out)
}
