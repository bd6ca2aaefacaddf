use crate::entropy::{eval_eta_star, RelativeEntropyRef};
use crate::error::{Result, SelError};
use crate::grid::Grid;
use crate::params::ModelParams;
use crate::splitting::Trajectory;
use crate::state::FieldState;

/// Exponentially scaled variables w = e^{Mt}(rho - rho*), y = -int_0^x w,
/// z = e^{Mt} m. `y` holds cell-center values of the cumulative midpoint sum;
/// `y_end` is the trailing node value, which vanishes when mass is conserved.
#[derive(Debug, Clone)]
pub struct TransformedState {
    pub m_scale: f64,
    pub t: f64,
    pub w: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub y_end: f64,
}

pub fn transform(
    state: &FieldState,
    t: f64,
    m_scale: f64,
    rho_star: f64,
    grid: &Grid,
) -> TransformedState {
    let n = state.n();
    let e = (m_scale * t).exp();
    let mut w = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut cum = 0.0; // node value of -int_0^x w at the left face of cell i
    for i in 0..n {
        let wi = e * (state.rho[i] - rho_star);
        w.push(wi);
        y.push(cum - 0.5 * wi * grid.dx);
        cum -= wi * grid.dx;
        z.push(e * state.m[i]);
    }
    TransformedState { m_scale, t, w, y, z, y_end: cum }
}

/// Constants of the Gronwall argument. `k_const` follows the branch rule
/// K = max(Lambda + 2 rho*, 2 Lambda) / min(alpha, 1), which covers both the
/// alpha < 1 and alpha >= 1 cases at once.
#[derive(Debug, Clone, Copy)]
pub struct LongTimeConstants {
    pub lambda: f64,
    pub rho_star: f64,
    pub k_const: f64,
    pub m_scale: f64,
    pub a0: f64,
}

impl LongTimeConstants {
    /// `max_rho_observed` is the running max of rho over the realized
    /// trajectories; Lambda takes the larger of it and the initial envelope M1.
    pub fn from_run(params: &ModelParams, rho_star: f64, max_rho_observed: f64, m_scale: f64) -> Result<Self> {
        if !(rho_star > 0.0) {
            return Err(SelError::ParamDomain(format!("rho_star must be > 0, got {rho_star}")));
        }
        let lambda = max_rho_observed.max(params.m1);
        let k_const = (lambda + 2.0 * rho_star).max(2.0 * lambda) / params.alpha.min(1.0);
        Ok(LongTimeConstants { lambda, rho_star, k_const, m_scale, a0: params.a0 })
    }

    /// Default M = alpha; the fitted decay rate does not depend on it.
    pub fn default_m_scale(params: &ModelParams) -> f64 {
        params.alpha
    }
}

/// (sum (rho - rho*)^2 dx, sum m^2 dx).
pub fn l2_deviation(state: &FieldState, rho_star: f64, grid: &Grid) -> (f64, f64) {
    let mut dr = 0.0;
    let mut dm = 0.0;
    for i in 0..state.n() {
        dr += (state.rho[i] - rho_star) * (state.rho[i] - rho_star);
        dm += state.m[i] * state.m[i];
    }
    (dr * grid.dx, dm * grid.dx)
}

/// Integral of eta* over the cells.
pub fn integral_eta_star(state: &FieldState, rho_star: f64, params: &ModelParams, grid: &Grid) -> f64 {
    let rf = RelativeEntropyRef { rho_star };
    state
        .rho
        .iter()
        .zip(&state.m)
        .map(|(&r, &m)| eval_eta_star(r, m, &rf, params))
        .sum::<f64>()
        * grid.dx
}

/// Q(t) = int K e^{2Mt} eta*(U) + y z + (alpha/2) y^2 dx, evaluated literally.
pub fn compute_q(
    state: &FieldState,
    t: f64,
    consts: &LongTimeConstants,
    params: &ModelParams,
    grid: &Grid,
) -> f64 {
    let tr = transform(state, t, consts.m_scale, consts.rho_star, grid);
    let e2 = (2.0 * consts.m_scale * t).exp();
    let rf = RelativeEntropyRef { rho_star: consts.rho_star };
    let mut acc = 0.0;
    for i in 0..state.n() {
        let eta = eval_eta_star(state.rho[i], state.m[i], &rf, params);
        acc += consts.k_const * e2 * eta
            + tr.y[i] * tr.z[i]
            + 0.5 * params.alpha * tr.y[i] * tr.y[i];
    }
    acc * grid.dx
}

/// Both printed variants of the functional at once: the alpha/2 coefficient
/// used by the Gronwall combination (first) and the plain 1/2 coefficient
/// (second). They coincide exactly when alpha = 1; when alpha differs both
/// are tracked by the invariant sweep.
pub fn compute_q_forms(
    state: &FieldState,
    t: f64,
    consts: &LongTimeConstants,
    params: &ModelParams,
    grid: &Grid,
) -> (f64, f64) {
    let tr = transform(state, t, consts.m_scale, consts.rho_star, grid);
    let e2 = (2.0 * consts.m_scale * t).exp();
    let rf = RelativeEntropyRef { rho_star: consts.rho_star };
    let mut base = 0.0;
    let mut y2 = 0.0;
    for i in 0..state.n() {
        let eta = eval_eta_star(state.rho[i], state.m[i], &rf, params);
        base += consts.k_const * e2 * eta + tr.y[i] * tr.z[i];
        y2 += tr.y[i] * tr.y[i];
    }
    ((base + 0.5 * params.alpha * y2) * grid.dx, (base + 0.5 * y2) * grid.dx)
}

/// e^{-2Mt} Q(t) computed in the scaling-cancelled form
/// int K eta* + yhat m + (alpha/2) yhat^2 dx, with yhat the unscaled
/// antiderivative. Stable for large M t.
pub fn q_decayed(
    state: &FieldState,
    consts: &LongTimeConstants,
    params: &ModelParams,
    grid: &Grid,
) -> f64 {
    let tr = transform(state, 0.0, consts.m_scale, consts.rho_star, grid);
    let rf = RelativeEntropyRef { rho_star: consts.rho_star };
    let mut acc = 0.0;
    for i in 0..state.n() {
        let eta = eval_eta_star(state.rho[i], state.m[i], &rf, params);
        acc += consts.k_const * eta + tr.y[i] * state.m[i] + 0.5 * params.alpha * tr.y[i] * tr.y[i];
    }
    acc * grid.dx
}

/// Per-cell domination sweep of one state: num <= C * den + slack with
/// num = (rho-rho*)^2 + m^2 (gamma <= 2; |rho-rho*|^gamma + m^2 above) and
/// den the decayed per-cell Gronwall integrand. Returns (max ratio, min den).
pub fn domination_stats(
    state: &FieldState,
    consts: &LongTimeConstants,
    params: &ModelParams,
    grid: &Grid,
) -> (f64, f64) {
    let tr = transform(state, 0.0, consts.m_scale, consts.rho_star, grid);
    let rf = RelativeEntropyRef { rho_star: consts.rho_star };
    let slack = 1e-12;
    let mut max_ratio: f64 = 0.0;
    let mut min_den = f64::INFINITY;
    for i in 0..state.n() {
        let d = state.rho[i] - consts.rho_star;
        let num = if params.gamma <= 2.0 {
            d * d + state.m[i] * state.m[i]
        } else {
            d.abs().powf(params.gamma) + state.m[i] * state.m[i]
        };
        let eta = eval_eta_star(state.rho[i], state.m[i], &rf, params);
        let den = consts.k_const * eta
            + tr.y[i] * state.m[i]
            + 0.5 * params.alpha * tr.y[i] * tr.y[i];
        min_den = min_den.min(den);
        if den > 0.0 {
            let r = (num - slack).max(0.0) / den;
            max_ratio = max_ratio.max(r);
        }
    }
    (max_ratio, min_den)
}

/// Ensemble moment series with standard errors.
#[derive(Debug, Clone)]
pub struct MomentSeries {
    pub t: Vec<f64>,
    /// E int (rho - rho*)^2 + m^2 dx
    pub mean_sq_dev: Vec<f64>,
    pub se_sq_dev: Vec<f64>,
    /// E int eta* dx
    pub mean_eta_star: Vec<f64>,
    pub se_eta_star: Vec<f64>,
    /// E (int eta* dx)^2
    pub mean_eta_star_sq: Vec<f64>,
    pub se_eta_star_sq: Vec<f64>,
    pub n_paths: usize,
}

/// Reduces trajectories in path-index order. All trajectories must share the
/// record times and the reference mass.
pub fn ensemble_moments(
    trajectories: &[Trajectory],
    params: &ModelParams,
    grid: &Grid,
) -> Result<MomentSeries> {
    if trajectories.len() < 2 {
        return Err(SelError::Precondition("ensemble_moments needs >= 2 trajectories".into()));
    }
    let mut order: Vec<usize> = (0..trajectories.len()).collect();
    order.sort_by_key(|&i| trajectories[i].path_index);
    let first = &trajectories[order[0]];
    let times = first.record_times();
    let rho_star = first.rho_star;
    for &i in &order[1..] {
        let tr = &trajectories[i];
        if tr.snapshots.len() != times.len() {
            return Err(SelError::Alignment(format!(
                "trajectory {} has {} snapshots, expected {}",
                tr.path_index,
                tr.snapshots.len(),
                times.len()
            )));
        }
        for (k, (t, _)) in tr.snapshots.iter().enumerate() {
            if (t - times[k]).abs() > 1e-10 {
                return Err(SelError::Alignment(format!(
                    "trajectory {} records t = {t}, expected {}",
                    tr.path_index, times[k]
                )));
            }
        }
        if (tr.rho_star - rho_star).abs() > 1e-12 {
            return Err(SelError::Alignment("trajectories disagree on rho_star".into()));
        }
    }

    let np = order.len();
    let nt = times.len();
    let mut out = MomentSeries {
        t: times.clone(),
        mean_sq_dev: vec![0.0; nt],
        se_sq_dev: vec![0.0; nt],
        mean_eta_star: vec![0.0; nt],
        se_eta_star: vec![0.0; nt],
        mean_eta_star_sq: vec![0.0; nt],
        se_eta_star_sq: vec![0.0; nt],
        n_paths: np,
    };
    for k in 0..nt {
        let mut vals_dev = Vec::with_capacity(np);
        let mut vals_eta = Vec::with_capacity(np);
        let mut vals_eta_sq = Vec::with_capacity(np);
        for &i in &order {
            let state = &trajectories[i].snapshots[k].1;
            let (dr, dm) = l2_deviation(state, rho_star, grid);
            let eta = integral_eta_star(state, rho_star, params, grid);
            vals_dev.push(dr + dm);
            vals_eta.push(eta);
            vals_eta_sq.push(eta * eta);
        }
        // shifted by the first value so a degenerate (all-equal) ensemble
        // yields the exact mean and exactly zero variance
        let stats = |vals: &[f64]| -> (f64, f64) {
            let v0 = vals[0];
            let mean_shift = vals.iter().map(|v| v - v0).sum::<f64>() / np as f64;
            let mean = v0 + mean_shift;
            let var = vals
                .iter()
                .map(|v| ((v - v0) - mean_shift) * ((v - v0) - mean_shift))
                .sum::<f64>()
                / (np as f64 - 1.0).max(1.0);
            (mean, (var / np as f64).sqrt())
        };
        (out.mean_sq_dev[k], out.se_sq_dev[k]) = stats(&vals_dev);
        (out.mean_eta_star[k], out.se_eta_star[k]) = stats(&vals_eta);
        (out.mean_eta_star_sq[k], out.se_eta_star_sq[k]) = stats(&vals_eta_sq);
    }
    Ok(out)
}

/// Exponential fit v ~ prefactor * exp(-rate * t) over a window.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    pub rate: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// Least-squares line through (t, ln v) on the window. Nonpositive values in
/// the window are a domain error (shrink the window).
pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= window.0 - 1e-12 && *t <= window.1 + 1e-12)
        .map(|&(t, v)| (t, v))
        .collect();
    if pts.len() < 2 {
        return Err(SelError::Precondition(format!(
            "fit window [{}, {}] holds {} points, need >= 2",
            window.0,
            window.1,
            pts.len()
        )));
    }
    for &(t, v) in &pts {
        if !(v > 0.0) {
            return Err(SelError::ParamDomain(format!(
                "fit_decay: value {v} at t = {t} is not positive; shrink the window"
            )));
        }
    }
    let n = pts.len() as f64;
    let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for &(t, v) in &pts {
        let y = v.ln();
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    let det = n * stt - st * st;
    if det.abs() < 1e-300 {
        return Err(SelError::Precondition("fit_decay: degenerate time window".into()));
    }
    let slope = (n * sty - st * sy) / det;
    let intercept = (sy - slope * st) / n;
    let mean_y = sy / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for &(t, v) in &pts {
        let y = v.ln();
        ss_res += (y - (intercept + slope * t)) * (y - (intercept + slope * t));
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r_squared = if ss_tot <= 1e-28 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    Ok(DecayFit { rate: -slope, prefactor: intercept.exp(), r_squared, window })
}

/// Small-noise regime classification for the configured run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseRegime {
    Deterministic,
    Inside,
    Outside,
}

#[derive(Debug, Clone, Copy)]
pub struct NoiseThresholdReport {
    pub a0: f64,
    pub min_alpha_one: f64,
    /// Measured domination constant feeding C tilde (max(1, C3)).
    pub c3_measured: f64,
    pub c_tilde: f64,
    /// The admissible bound (C tilde / 2) min(alpha, 1).
    pub threshold: f64,
    pub regime: NoiseRegime,
}

/// Informational check of the small-noise hypothesis A0 < (C~/2) min(alpha,1)
/// with C~ = 1 / max(1, C3) and C3 the measured domination constant. Never
/// blocks a run.
pub fn noise_threshold_report(params: &ModelParams, c3_measured: f64) -> NoiseThresholdReport {
    let min_alpha_one = params.alpha.min(1.0);
    let c_tilde = 1.0 / c3_measured.max(1.0);
    let threshold = 0.5 * c_tilde * min_alpha_one;
    let regime = if params.a0 == 0.0 {
        NoiseRegime::Deterministic
    } else if params.a0 < threshold {
        NoiseRegime::Inside
    } else {
        NoiseRegime::Outside
    };
    NoiseThresholdReport {
        a0: params.a0,
        min_alpha_one,
        c3_measured: c3_measured.max(1.0),
        c_tilde,
        threshold,
        regime,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;
    use std::f64::consts::PI;

    fn params() -> ModelParams {
        make_params(2.0, 1.0, 1e-3, 0.01, 1.0, 1.0).unwrap()
    }

    #[test]
    fn l2_deviation_examples() {
        let grid = Grid::new(200).unwrap();
        let rho_star = 1.5;
        let s = FieldState::constant(200, rho_star, 0.0);
        assert_eq!(l2_deviation(&s, rho_star, &grid), (0.0, 0.0));

        let rho: Vec<f64> = grid.x_centers.iter().map(|&x| rho_star + (PI * x).cos()).collect();
        let s = FieldState::new(rho, vec![1.0; 200], 0.0).unwrap();
        let (dr, dm) = l2_deviation(&s, rho_star, &grid);
        assert!((dr - 0.5).abs() < 1e-4, "{dr}");
        assert!((dm - 1.0).abs() < 1e-12, "{dm}");
    }

    #[test]
    fn transform_basics() {
        let grid = Grid::new(100).unwrap();
        let rho: Vec<f64> = grid.x_centers.iter().map(|&x| 0.5 + 0.1 * (2.0 * PI * x).cos()).collect();
        let m: Vec<f64> = grid.x_centers.iter().map(|&x| 0.02 * (PI * x).sin()).collect();
        let s = FieldState::new(rho, m.clone(), 0.0).unwrap();
        let rho_star = s.mass(&grid);

        // t = 0: w = rho - rho*, z = m
        let tr = transform(&s, 0.0, 1.0, rho_star, &grid);
        for i in 0..100 {
            assert!((tr.w[i] - (s.rho[i] - rho_star)).abs() < 1e-15);
            assert_eq!(tr.z[i], m[i]);
        }
        // y at last node vanishes when mass is exactly the reference
        assert!(tr.y_end.abs() <= 1e-12, "y_end = {}", tr.y_end);

        // constant state: w = y = 0
        let c = FieldState::constant(100, 0.7, 0.0);
        let tr = transform(&c, 3.0, 2.0, 0.7, &grid);
        assert!(tr.w.iter().all(|&w| w == 0.0));
        assert!(tr.y.iter().all(|&y| y == 0.0));
    }

    #[test]
    fn q_vanishes_at_reference_state() {
        let grid = Grid::new(64).unwrap();
        let p = params();
        let consts = LongTimeConstants::from_run(&p, 0.5, 0.9, 1.0).unwrap();
        let s = FieldState::constant(64, 0.5, 0.0);
        assert_eq!(compute_q(&s, 0.7, &consts, &p, &grid), 0.0);
        assert_eq!(q_decayed(&s, &consts, &p, &grid), 0.0);
    }

    #[test]
    fn q_forms_coincide_only_at_unit_damping() {
        let grid = Grid::new(64).unwrap();
        let rho: Vec<f64> = grid.x_centers.iter().map(|&x| 0.5 + 0.1 * (2.0 * PI * x).cos()).collect();
        let s = FieldState::new(rho, vec![0.02; 64], 0.0).unwrap();
        let rho_star = s.mass(&grid);

        let p1 = make_params(2.0, 1.0, 1e-3, 0.01, 1.0, 1.0).unwrap();
        let c1 = LongTimeConstants::from_run(&p1, rho_star, 0.9, 1.0).unwrap();
        let (qa, qb) = compute_q_forms(&s, 0.3, &c1, &p1, &grid);
        assert_eq!(qa, qb);
        assert!((qa - compute_q(&s, 0.3, &c1, &p1, &grid)).abs() <= 1e-12 * qa.abs());

        let p2 = make_params(2.0, 0.25, 1e-3, 0.01, 1.0, 1.0).unwrap();
        let c2 = LongTimeConstants::from_run(&p2, rho_star, 0.9, 0.25).unwrap();
        let (qa, qb) = compute_q_forms(&s, 0.3, &c2, &p2, &grid);
        assert!(qa < qb, "alpha/2 form must sit below the 1/2 form for alpha < 1");
        // both vanish at the reference state
        let r = FieldState::constant(64, rho_star, 0.0);
        assert_eq!(compute_q_forms(&r, 1.0, &c2, &p2, &grid), (0.0, 0.0));
    }

    #[test]
    fn q_m_scale_cancels_at_t0() {
        let grid = Grid::new(64).unwrap();
        let p = params();
        let rho: Vec<f64> = grid.x_centers.iter().map(|&x| 0.5 + 0.1 * (2.0 * PI * x).cos()).collect();
        let s = FieldState::new(rho, vec![0.01; 64], 0.0).unwrap();
        let rho_star = s.mass(&grid);
        let c1 = LongTimeConstants::from_run(&p, rho_star, 0.9, 1.0).unwrap();
        let c2 = LongTimeConstants::from_run(&p, rho_star, 0.9, 2.0).unwrap();
        let q1 = compute_q(&s, 0.0, &c1, &p, &grid);
        let q2 = compute_q(&s, 0.0, &c2, &p, &grid);
        assert!((q1 - q2).abs() <= 1e-12 * q1.abs().max(1.0));
    }

    #[test]
    fn q_decayed_matches_literal_q() {
        let grid = Grid::new(64).unwrap();
        let p = params();
        let rho: Vec<f64> = grid.x_centers.iter().map(|&x| 0.5 + 0.05 * (2.0 * PI * x).sin()).collect();
        let s = FieldState::new(rho, vec![0.003; 64], 0.0).unwrap();
        let rho_star = s.mass(&grid);
        let consts = LongTimeConstants::from_run(&p, rho_star, 0.9, 1.0).unwrap();
        for t in [0.0, 0.5, 2.0] {
            let lit = (-2.0 * consts.m_scale * t).exp() * compute_q(&s, t, &consts, &p, &grid);
            let stable = q_decayed(&s, &consts, &p, &grid);
            assert!((lit - stable).abs() <= 1e-10 * stable.abs().max(1e-12), "t = {t}: {lit} vs {stable}");
        }
    }

    #[test]
    fn k_const_invariant() {
        let grid = Grid::new(16).unwrap();
        let _ = grid;
        for alpha in [0.25, 1.0, 3.0] {
            let p = make_params(2.0, alpha, 1e-3, 0.01, 1.0, 1.0).unwrap();
            let c = LongTimeConstants::from_run(&p, 0.4, 0.8, 1.0).unwrap();
            let lhs = alpha.min(1.0) * c.k_const;
            assert!(lhs >= c.lambda + 2.0 * c.rho_star - 1e-12);
            assert!(lhs >= 2.0 * c.lambda - 1e-12);
        }
    }

    #[test]
    fn domination_on_random_states() {
        let grid = Grid::new(64).unwrap();
        let p = params();
        let rho: Vec<f64> = grid
            .x_centers
            .iter()
            .map(|&x| 0.3 + 0.4 * (-((x - 0.4) / 0.15_f64).powi(2)).exp())
            .collect();
        let m: Vec<f64> = grid.x_centers.iter().map(|&x| 0.05 * (PI * x).sin()).collect();
        let s = FieldState::new(rho, m, 0.0).unwrap();
        let rho_star = s.mass(&grid);
        let consts = LongTimeConstants::from_run(&p, rho_star, 0.9, 1.0).unwrap();
        let (max_ratio, min_den) = domination_stats(&s, &consts, &p, &grid);
        assert!(max_ratio.is_finite() && max_ratio > 0.0);
        assert!(min_den > -1e-12, "denominator went negative: {min_den}");
    }

    #[test]
    fn fit_exact_exponential() {
        let series: Vec<(f64, f64)> =
            (0..101).map(|k| (0.1 * k as f64, 3.0 * (-0.7 * 0.1 * k as f64).exp())).collect();
        let fit = fit_decay(&series, (0.0, 10.0)).unwrap();
        assert!((fit.rate - 0.7).abs() < 1e-9, "{}", fit.rate);
        assert!((fit.prefactor - 3.0).abs() < 1e-9, "{}", fit.prefactor);
        assert!(fit.r_squared > 1.0 - 1e-9);
    }

    #[test]
    fn fit_constant_series() {
        let series: Vec<(f64, f64)> = (0..20).map(|k| (k as f64, 2.5)).collect();
        let fit = fit_decay(&series, (0.0, 19.0)).unwrap();
        assert!(fit.rate.abs() < 1e-12);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn fit_noisy_exponential() {
        let mut series = Vec::new();
        for k in 0..200 {
            let t = 0.05 * k as f64;
            let wobble = 1.0 + 0.01 * (crate::brownian::standard_normal(77, k as u64)).tanh();
            series.push((t, 3.0 * (-0.7 * t).exp() * wobble));
        }
        let fit = fit_decay(&series, (0.0, 10.0)).unwrap();
        assert!((fit.rate - 0.7).abs() < 0.05, "{}", fit.rate);
        assert!(fit.r_squared >= 0.95);
    }

    #[test]
    fn fit_rejects_nonpositive_values() {
        let series = vec![(0.0, 1.0), (1.0, 0.0), (2.0, 0.5)];
        assert!(fit_decay(&series, (0.0, 2.0)).is_err());
        // shrinking the window past the zero entry succeeds
        assert!(fit_decay(&series, (1.5, 2.5)).is_err()); // single point
    }

    #[test]
    fn fit_time_rescaling() {
        let series: Vec<(f64, f64)> =
            (0..50).map(|k| (0.2 * k as f64, 2.0 * (-0.5 * 0.2 * k as f64).exp())).collect();
        let fit = fit_decay(&series, (0.0, 10.0)).unwrap();
        let series_scaled: Vec<(f64, f64)> = series.iter().map(|&(t, v)| (2.0 * t, v)).collect();
        let fit2 = fit_decay(&series_scaled, (0.0, 20.0)).unwrap();
        assert!((fit2.rate - 0.5 * fit.rate).abs() < 1e-12);
        assert!((fit2.prefactor - fit.prefactor).abs() < 1e-12);
    }

    #[test]
    fn ensemble_moments_permutation_invariant() {
        use crate::config::RunConfig;
        use crate::ensemble::run_ensemble;
        let cfg = RunConfig {
            n_cells: 32,
            t_final: 0.2,
            n_windows: 20,
            paths: 5,
            record_every: 5,
            ..Default::default()
        };
        let params = cfg.model_params().unwrap();
        let grid = cfg.grid().unwrap();
        let result = run_ensemble(&cfg).unwrap();
        let a = ensemble_moments(&result.trajectories, &params, &grid).unwrap();
        let mut shuffled = result.trajectories.clone();
        shuffled.reverse();
        shuffled.swap(0, 2);
        let b = ensemble_moments(&shuffled, &params, &grid).unwrap();
        assert_eq!(a.mean_sq_dev, b.mean_sq_dev);
        assert_eq!(a.se_sq_dev, b.se_sq_dev);
        assert_eq!(a.mean_eta_star_sq, b.mean_eta_star_sq);
    }

    #[test]
    fn noise_regime_classification() {
        let p0 = make_params(2.0, 1.0, 1e-3, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(noise_threshold_report(&p0, 5.0).regime, NoiseRegime::Deterministic);

        let p1 = make_params(2.0, 1.0, 1e-3, 0.01, 1.0, 1.0).unwrap();
        // inside for any measured C tilde >= 0.02, i.e. C3 <= 50
        assert_eq!(noise_threshold_report(&p1, 20.0).regime, NoiseRegime::Inside);
        let hopeless = make_params(2.0, 0.1, 1e-3, 50.0, 1.0, 1.0).unwrap();
        assert_eq!(noise_threshold_report(&hopeless, 20.0).regime, NoiseRegime::Outside);
    }
}
