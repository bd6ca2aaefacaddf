use crate::brownian::BrownianPath;
use crate::det::{apply_s, DetSolverConfig};
use crate::entropy::{entropy_grad, entropy_hessian, eval_entropy, eval_entropy_flux, EntropyPair};
use crate::error::{Result, SelError};
use crate::grid::Grid;
use crate::noise::NoiseSpec;
use crate::params::ModelParams;
use crate::state::FieldState;
use crate::stoch::{apply_r, stoch_substep, ClampLog, StochStepConfig};

/// How the splitting scheme reports states between window endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Convex combination of the deterministic and stochastic legs inside
    /// each window; continuous-in-time diagnostics.
    Interpolated,
    /// Classical Lie-Trotter: states at window endpoints only.
    Endpoint,
}

impl std::str::FromStr for SplitMode {
    type Err = SelError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interpolated" => Ok(SplitMode::Interpolated),
            "endpoint" => Ok(SplitMode::Endpoint),
            other => Err(SelError::Config(format!("unknown mode '{other}'"))),
        }
    }
}

/// Splitting configuration: horizon, window count, mode, output times.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitConfig {
    pub t_final: f64,
    pub n_windows: usize,
    pub mode: SplitMode,
    /// Requested output timestamps in [0, T]; snapped to the finest grid the
    /// mode supports (window endpoints, or EM substeps when interpolated).
    pub record_times: Vec<f64>,
}

impl SplitConfig {
    pub fn tau(&self) -> f64 {
        self.t_final / self.n_windows as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final >= 0.0) {
            return Err(SelError::ParamDomain(format!("t_final must be >= 0, got {}", self.t_final)));
        }
        if self.n_windows == 0 {
            return Err(SelError::ParamDomain("n_windows must be >= 1".into()));
        }
        for &t in &self.record_times {
            if !(0.0..=self.t_final + 1e-12).contains(&t) {
                return Err(SelError::ParamDomain(format!("record time {t} outside [0, T]")));
            }
        }
        Ok(())
    }

    /// Evenly spaced record times: every `every`-th window endpoint plus t=0.
    pub fn every_k_windows(t_final: f64, n_windows: usize, every: usize, mode: SplitMode) -> Self {
        let tau = t_final / n_windows as f64;
        let mut record_times = vec![0.0];
        let mut k = every.max(1);
        while k <= n_windows {
            record_times.push(k as f64 * tau);
            k += every.max(1);
        }
        if *record_times.last().unwrap() < t_final - 1e-12 {
            record_times.push(t_final);
        }
        SplitConfig { t_final, n_windows, mode, record_times }
    }
}

/// Per-snapshot scalar diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagRow {
    pub t: f64,
    pub mass: f64,
    pub max_w: f64,
    pub min_z: f64,
    pub l2_rho_dev: f64,
    pub l2_m: f64,
}

/// A recorded run: snapshots at the requested times plus diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Ensemble slot this path occupies (0 for single runs).
    pub path_index: usize,
    pub rho_star: f64,
    pub snapshots: Vec<(f64, FieldState)>,
    pub diagnostics: Vec<DiagRow>,
    pub clamp: ClampLog,
}

impl Trajectory {
    pub fn record_times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|(t, _)| *t).collect()
    }

    pub fn terminal(&self) -> &FieldState {
        &self.snapshots.last().expect("trajectory recorded no snapshots").1
    }
}

fn diag_row(state: &FieldState, t: f64, rho_star: f64, grid: &Grid, params: &ModelParams) -> DiagRow {
    let (_, _, max_w, min_z) = crate::det::compute_invariants(state, params, crate::params::DEFAULT_RHO_FLOOR);
    let mut dev = 0.0;
    let mut l2m = 0.0;
    for i in 0..state.n() {
        dev += (state.rho[i] - rho_star) * (state.rho[i] - rho_star);
        l2m += state.m[i] * state.m[i];
    }
    DiagRow {
        t,
        mass: state.mass(grid),
        max_w,
        min_z,
        l2_rho_dev: dev * grid.dx,
        l2_m: l2m * grid.dx,
    }
}

fn convex_combine(a_w: f64, a: &FieldState, b_w: f64, b: &FieldState, t: f64) -> FieldState {
    let n = a.n();
    let mut rho = Vec::with_capacity(n);
    let mut m = Vec::with_capacity(n);
    for i in 0..n {
        rho.push(a_w * a.rho[i] + b_w * b.rho[i]);
        m.push(a_w * a.m[i] + b_w * b.m[i]);
    }
    FieldState { rho, m, t }
}

fn check_path_resolution(path: &BrownianPath, tau: f64, substeps: usize) -> Result<()> {
    let expect = tau / substeps as f64;
    if (path.dt - expect).abs() > 1e-9 * expect {
        return Err(SelError::Precondition(format!(
            "path resolution {} does not match tau/substeps = {expect}",
            path.dt
        )));
    }
    Ok(())
}

/// Runs the interpolated Lie-Trotter scheme over [0, T].
///
/// On each window (t_n, t_{n+1}] the deterministic leg is Ubar(t) =
/// S(t - t_n) U_n and the stochastic leg is Utilde(t) = R(t, t_n) S(tau) U_n;
/// recorded interior states are the convex combination
/// ((t_{n+1}-t)/tau) Ubar + ((t-t_n)/tau) Utilde. The state carried to the
/// next window is always Utilde(t_{n+1}).
#[allow(clippy::too_many_arguments)]
pub fn lie_trotter_run(
    state0: &FieldState,
    path: &BrownianPath,
    grid: &Grid,
    params: &ModelParams,
    noise: &NoiseSpec,
    split: &SplitConfig,
    det_cfg: &DetSolverConfig,
    stoch_cfg: &StochStepConfig,
) -> Result<Trajectory> {
    split.validate()?;
    det_cfg.validate()?;
    let tau = split.tau();
    let substeps = stoch_cfg.substeps_per_interval.max(1);
    check_path_resolution(path, tau, substeps)?;
    let rho_star = state0.mass(grid);

    // snap record times onto the supported grid and bucket them per window
    let snap_dt = match split.mode {
        SplitMode::Endpoint => tau,
        SplitMode::Interpolated => tau / substeps as f64,
    };
    let mut marks: Vec<f64> = split
        .record_times
        .iter()
        .map(|&t| (t / snap_dt).round() * snap_dt)
        .collect();
    marks.sort_by(f64::total_cmp);
    marks.dedup();

    let mut snapshots = Vec::with_capacity(marks.len());
    let mut diagnostics = Vec::with_capacity(marks.len());
    let mut clamp = ClampLog::default();
    let mut record = |t: f64, s: &FieldState| {
        snapshots.push((t, s.clone()));
        diagnostics.push(diag_row(s, t, rho_star, grid, params));
    };

    let mut next_mark = 0usize;
    if next_mark < marks.len() && marks[next_mark] <= 0.0 {
        record(0.0, state0);
        next_mark += 1;
    }

    let mut u_n = state0.clone();
    for n in 0..split.n_windows {
        let t_n = n as f64 * tau;
        let t_np1 = (n + 1) as f64 * tau;
        let ubar_end = apply_s(&u_n, tau, grid, params, det_cfg)?;
        // interior marks of this window (interpolated mode only)
        while next_mark < marks.len() && marks[next_mark] < t_np1 - 0.5 * snap_dt {
            let t = marks[next_mark];
            debug_assert!(split.mode == SplitMode::Interpolated);
            let ubar_t = apply_s(&u_n, t - t_n, grid, params, det_cfg)
                .map_err(|e| attach_window(e, n))?;
            let (utilde_t, lg) = apply_r(&ubar_end, t_n, t, path, noise, grid, stoch_cfg)
                .map_err(|e| attach_window(e, n))?;
            merge_clamp(&mut clamp, &lg);
            let a = (t_np1 - t) / tau;
            let b = (t - t_n) / tau;
            let u_t = convex_combine(a, &ubar_t, b, &utilde_t, t);
            record(t, &u_t);
            next_mark += 1;
        }
        let (u_next, lg) = apply_r(&ubar_end, t_n, t_np1, path, noise, grid, stoch_cfg)
            .map_err(|e| attach_window(e, n))?;
        merge_clamp(&mut clamp, &lg);
        u_n = u_next;
        if next_mark < marks.len() && (marks[next_mark] - t_np1).abs() <= 0.5 * snap_dt {
            record(t_np1, &u_n);
            next_mark += 1;
        }
    }

    Ok(Trajectory { path_index: 0, rho_star, snapshots, diagnostics, clamp })
}

fn merge_clamp(total: &mut ClampLog, part: &ClampLog) {
    total.count += part.count;
    total.max_magnitude = total.max_magnitude.max(part.max_magnitude);
}

fn attach_window(e: SelError, window: usize) -> SelError {
    match e {
        SelError::Blowup { cell, t, what } => {
            SelError::Blowup { cell, t, what: format!("{what} (window {window})") }
        }
        other => other,
    }
}

/// One row of the tau-refinement table.
#[derive(Debug, Clone, Copy)]
pub struct RefinementRow {
    pub tau: f64,
    /// E || U_tau(T) - U_{tau/2}(T) ||_{L2} against the next-finer level.
    pub err_vs_next: f64,
    /// err of the previous row divided by this row's err (>= 1 means
    /// first-order-ish self-convergence).
    pub ratio: Option<f64>,
}

fn l2_distance(a: &FieldState, b: &FieldState, grid: &Grid) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.n() {
        let dr = a.rho[i] - b.rho[i];
        let dm = a.m[i] - b.m[i];
        acc += dr * dr + dm * dm;
    }
    (acc * grid.dx).sqrt()
}

/// Self-convergence study over a halving tau sequence with sum-consistent
/// Brownian refinement: every level of every path refines the same coarse
/// draw. The deterministic legs substep at tau/det_substeps so the overall
/// resolution scales with tau.
#[allow(clippy::too_many_arguments)]
pub fn tau_refinement_study(
    state0: &FieldState,
    t_final: f64,
    taus: &[f64],
    n_paths: usize,
    base_seed: u64,
    grid: &Grid,
    params: &ModelParams,
    noise: &NoiseSpec,
    det_substeps: usize,
    stoch_cfg: &StochStepConfig,
) -> Result<Vec<RefinementRow>> {
    if taus.len() < 2 {
        return Err(SelError::Precondition("need at least two tau levels".into()));
    }
    for w in taus.windows(2) {
        if (w[1] - 0.5 * w[0]).abs() > 1e-12 * w[0] {
            return Err(SelError::Precondition(format!(
                "taus must halve: {} then {}",
                w[0], w[1]
            )));
        }
    }
    let substeps = stoch_cfg.substeps_per_interval.max(1);
    let n_levels = taus.len() + 1; // one extra level to difference the last tau against

    // terminal states, indexed [level][path]
    let mut terminal: Vec<Vec<FieldState>> = Vec::with_capacity(n_levels);
    for level in 0..n_levels {
        let tau = taus[0] / (1u64 << level) as f64;
        let n_windows = (t_final / tau).round() as usize;
        if n_windows == 0 {
            return Err(SelError::Precondition(format!("tau {tau} exceeds horizon {t_final}")));
        }
        let split = SplitConfig {
            t_final,
            n_windows,
            mode: SplitMode::Endpoint,
            record_times: vec![t_final],
        };
        let det_cfg = DetSolverConfig {
            fixed_dt: Some(tau / det_substeps as f64),
            ..DetSolverConfig::default()
        };
        let mut level_states = Vec::with_capacity(n_paths);
        for p in 0..n_paths {
            let seed = crate::ensemble::derive_seed(base_seed, p as u64);
            let dt0 = taus[0] / substeps as f64;
            let count0 = (t_final / dt0).round() as usize;
            let mut path = BrownianPath::sample(seed, dt0, count0)?;
            for _ in 0..level {
                path = path.refine();
            }
            let traj =
                lie_trotter_run(state0, &path, grid, params, noise, &split, &det_cfg, stoch_cfg)?;
            level_states.push(traj.terminal().clone());
        }
        terminal.push(level_states);
    }

    let mut rows = Vec::with_capacity(taus.len());
    let mut prev_err: Option<f64> = None;
    for (lvl, &tau) in taus.iter().enumerate() {
        let err = (0..n_paths)
            .map(|p| l2_distance(&terminal[lvl][p], &terminal[lvl + 1][p], grid))
            .sum::<f64>()
            / n_paths as f64;
        let ratio = prev_err.map(|pe| pe / err.max(f64::MIN_POSITIVE));
        rows.push(RefinementRow { tau, err_vs_next: err, ratio });
        prev_err = Some(err);
    }
    Ok(rows)
}

/// Entropy-balance accounting for one run.
#[derive(Debug, Clone)]
pub struct EntropyBalanceReport {
    /// Signed residual of the discrete balance per window.
    pub window_residuals: Vec<f64>,
    /// |sum of residuals|: the balance defect at T.
    pub total_defect: f64,
    /// sum |r_n|.
    pub l1: f64,
}

/// Compactly supported C^2 test bump on [0.1, 0.9], peak 1 at x = 1/2.
pub fn interior_bump(grid: &Grid) -> Vec<f64> {
    let lo = 0.1_f64;
    let hi = 0.9_f64;
    let scale = ((hi - lo) * 0.5).powi(6);
    grid.x_centers
        .iter()
        .map(|&x| {
            if x <= lo || x >= hi {
                0.0
            } else {
                (x - lo).powi(3) * (hi - x).powi(3) / scale
            }
        })
        .collect()
}

/// Replays an endpoint-mode run and evaluates every term of the viscous
/// entropy balance for the pair generated by `pair`:
/// the time difference of <eta, phi>, the flux term <H, d_x phi>, damping
/// -alpha <m d_m eta, phi>, the two viscosity terms, the Ito correction, and
/// the stochastic integral accumulated with the same increments that drive
/// the run. Returns the signed residual per window.
#[allow(clippy::too_many_arguments)]
pub fn entropy_residual(
    state0: &FieldState,
    path: &BrownianPath,
    grid: &Grid,
    params: &ModelParams,
    noise: &NoiseSpec,
    split: &SplitConfig,
    det_cfg: &DetSolverConfig,
    stoch_cfg: &StochStepConfig,
    pair: &EntropyPair,
    phi: &[f64],
) -> Result<EntropyBalanceReport> {
    split.validate()?;
    let n = grid.n;
    if phi.len() != n {
        return Err(SelError::Precondition("phi must have one weight per cell".into()));
    }
    for i in [0, 1, n - 2, n - 1] {
        if phi[i] != 0.0 {
            return Err(SelError::Precondition(
                "phi must vanish near both boundaries (first and last two cells)".into(),
            ));
        }
    }
    let tau = split.tau();
    let substeps = stoch_cfg.substeps_per_interval.max(1);
    check_path_resolution(path, tau, substeps)?;

    // discrete derivatives of phi (phi vanishes at the ends, plain stencils)
    let dx = grid.dx;
    let dphi: Vec<f64> = (0..n)
        .map(|i| {
            let l = if i == 0 { 0.0 } else { phi[i - 1] };
            let r = if i == n - 1 { 0.0 } else { phi[i + 1] };
            (r - l) / (2.0 * dx)
        })
        .collect();
    let d2phi: Vec<f64> = (0..n)
        .map(|i| {
            let l = if i == 0 { 0.0 } else { phi[i - 1] };
            let r = if i == n - 1 { 0.0 } else { phi[i + 1] };
            (l - 2.0 * phi[i] + r) / (dx * dx)
        })
        .collect();

    // spatial term sum at one state: everything except the stochastic integral
    let bulk_terms = |s: &FieldState| -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..n {
            if phi[i] == 0.0 && dphi[i] == 0.0 && d2phi[i] == 0.0 {
                continue;
            }
            let rho = s.rho[i];
            let m = s.m[i];
            let h = eval_entropy_flux(rho, m, pair, params);
            let eta = eval_entropy(rho, m, pair, params);
            let (_, d_m) = entropy_grad(rho, m, pair, params)
                .map_err(|_| SelError::Vacuum { rho, floor: crate::params::DEFAULT_RHO_FLOOR, cell: i })?;
            let (h_rr, h_rm, h_mm) = entropy_hessian(rho, m, pair, params)?;
            // centered state derivatives with the scheme's ghost convention
            let (rl, ml) = if i == 0 { (s.rho[0], -s.m[0]) } else { (s.rho[i - 1], s.m[i - 1]) };
            let (rr, mr) =
                if i == n - 1 { (s.rho[n - 1], -s.m[n - 1]) } else { (s.rho[i + 1], s.m[i + 1]) };
            let drho = (rr - rl) / (2.0 * dx);
            let dm_x = (mr - ml) / (2.0 * dx);
            let hess_q = h_rr * drho * drho + 2.0 * h_rm * drho * dm_x + h_mm * dm_x * dm_x;
            let sig = noise.sigma(grid.x_centers[i], rho, m);
            acc += h * dphi[i] - params.alpha * m * d_m * phi[i]
                + params.epsilon * (eta * d2phi[i] - hess_q * phi[i])
                + 0.5 * sig * sig * h_mm * phi[i];
        }
        Ok(acc * dx)
    };

    let eta_phi = |s: &FieldState| -> f64 {
        (0..n).map(|i| eval_entropy(s.rho[i], s.m[i], pair, params) * phi[i]).sum::<f64>() * dx
    };

    let mut residuals = Vec::with_capacity(split.n_windows);
    let mut u_n = state0.clone();
    for w in 0..split.n_windows {
        let t_n = w as f64 * tau;
        let t_np1 = (w + 1) as f64 * tau;
        let ubar_end = apply_s(&u_n, tau, grid, params, det_cfg)?;

        // stochastic leg with per-increment accounting (Ito: pre-state)
        let mut utilde = ubar_end.clone();
        let mut stoch_sum = 0.0;
        let mut lg = ClampLog::default();
        for &dw in path.slice(t_n, t_np1)? {
            let mut integrand = 0.0;
            for i in 0..n {
                if phi[i] == 0.0 {
                    continue;
                }
                let sig = noise.sigma(grid.x_centers[i], utilde.rho[i], utilde.m[i]);
                if sig == 0.0 {
                    continue;
                }
                let (_, d_m) = entropy_grad(utilde.rho[i], utilde.m[i], pair, params)?;
                integrand += sig * d_m * phi[i];
            }
            stoch_sum += integrand * dx * dw;
            stoch_substep(&mut utilde, dw, noise, grid, stoch_cfg.clamp, &mut lg);
        }
        utilde.t = t_np1;

        let bulk = 0.5 * (bulk_terms(&u_n)? + bulk_terms(&utilde)?) * tau;
        let residual = (eta_phi(&utilde) - eta_phi(&u_n)) - bulk - stoch_sum;
        residuals.push(residual);
        u_n = utilde;
    }

    let total: f64 = residuals.iter().sum();
    let l1 = residuals.iter().map(|r| r.abs()).sum();
    Ok(EntropyBalanceReport { window_residuals: residuals, total_defect: total.abs(), l1 })
}
