use crate::brownian::{mix64, BrownianPath};
use crate::config::RunConfig;
use crate::error::{Result, SelError};
use crate::longtime::{ensemble_moments, MomentSeries};
use crate::splitting::{lie_trotter_run, Trajectory};
use rayon::prelude::*;

/// Per-path seed: the splitmix64 finalizer of base XOR (index+1) * golden.
/// Injective over path_index for a fixed base because both maps are
/// bijections of u64.
pub fn derive_seed(base_seed: u64, path_index: u64) -> u64 {
    mix64(base_seed ^ path_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Worker-pool size: SEL_THREADS when set, otherwise rayon's default.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("SEL_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| SelError::Config(format!("SEL_THREADS must be an integer, got '{v}'")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| SelError::Config(format!("thread pool: {e}")))
}

/// Everything an ensemble run produces.
pub struct EnsembleResult {
    pub trajectories: Vec<Trajectory>,
    pub moments: MomentSeries,
    pub per_path_seeds: Vec<u64>,
}

/// Runs `cfg.paths` independent trajectories and reduces them in path-index
/// order, so results do not depend on the worker count.
pub fn run_ensemble(cfg: &RunConfig) -> Result<EnsembleResult> {
    cfg.validate()?;
    let params = cfg.model_params()?;
    let grid = cfg.grid()?;
    let noise = cfg.noise();
    let split = cfg.split()?;
    let det_cfg = cfg.det_cfg();
    let stoch_cfg = cfg.stoch_cfg();
    let state0 = cfg.initial_state(&grid, &params)?;

    let tau = split.tau();
    let dt = tau / stoch_cfg.substeps_per_interval as f64;
    let count = (cfg.t_final / dt).round() as usize;
    let per_path_seeds: Vec<u64> =
        (0..cfg.paths as u64).map(|p| derive_seed(cfg.seed, p)).collect();

    let pool = thread_pool()?;
    let trajectories: Result<Vec<Trajectory>> = pool.install(|| {
        per_path_seeds
            .par_iter()
            .enumerate()
            .map(|(index, &seed)| {
                let path = BrownianPath::sample(seed, dt, count)?;
                let mut traj = lie_trotter_run(
                    &state0, &path, &grid, &params, &noise, &split, &det_cfg, &stoch_cfg,
                )?;
                traj.path_index = index;
                Ok(traj)
            })
            .collect()
    });
    let trajectories = trajectories?;

    let moments = if trajectories.len() >= 2 {
        ensemble_moments(&trajectories, &params, &grid)?
    } else {
        // degenerate single-path ensemble: zero-variance moments
        let t = &trajectories[0];
        let times = t.record_times();
        let mut m = MomentSeries {
            t: times.clone(),
            mean_sq_dev: Vec::new(),
            se_sq_dev: vec![0.0; times.len()],
            mean_eta_star: Vec::new(),
            se_eta_star: vec![0.0; times.len()],
            mean_eta_star_sq: Vec::new(),
            se_eta_star_sq: vec![0.0; times.len()],
            n_paths: 1,
        };
        for (_, state) in &t.snapshots {
            let (dr, dm) = crate::longtime::l2_deviation(state, t.rho_star, &grid);
            let eta = crate::longtime::integral_eta_star(state, t.rho_star, &params, &grid);
            m.mean_sq_dev.push(dr + dm);
            m.mean_eta_star.push(eta);
            m.mean_eta_star_sq.push(eta * eta);
        }
        m
    };

    Ok(EnsembleResult { trajectories, moments, per_path_seeds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_seed_deterministic_and_distinct() {
        assert_eq!(derive_seed(42, 7), derive_seed(42, 7));
        // no collisions between the first two indices over many bases
        for k in 0..1_000_000u64 {
            let base = mix64(k);
            assert_ne!(derive_seed(base, 0), derive_seed(base, 1), "base {base}");
        }
    }

    #[test]
    fn derive_seed_low_bits_uniform() {
        // chi-square over 256 buckets of the low 32 bits, 1e5 seeds;
        // 330.5 is the 0.999 quantile at 255 dof
        let n = 100_000u64;
        let mut buckets = [0u64; 256];
        for i in 0..n {
            let s = derive_seed(0xDEADBEEF, i);
            buckets[((s & 0xFFFF_FFFF) % 256) as usize] += 1;
        }
        let expect = n as f64 / 256.0;
        let chi2: f64 =
            buckets.iter().map(|&b| (b as f64 - expect) * (b as f64 - expect) / expect).sum();
        assert!(chi2 < 330.5, "chi2 = {chi2}");
    }

    #[test]
    fn ensemble_is_reproducible_and_ordered() {
        let cfg = RunConfig {
            n_cells: 48,
            t_final: 0.2,
            n_windows: 20,
            paths: 4,
            record_every: 10,
            ..Default::default()
        };
        let a = run_ensemble(&cfg).unwrap();
        let b = run_ensemble(&cfg).unwrap();
        assert_eq!(a.per_path_seeds, b.per_path_seeds);
        for (ta, tb) in a.trajectories.iter().zip(&b.trajectories) {
            assert_eq!(ta.path_index, tb.path_index);
            for ((t1, s1), (t2, s2)) in ta.snapshots.iter().zip(&tb.snapshots) {
                assert_eq!(t1, t2);
                assert_eq!(s1.rho, s2.rho);
                assert_eq!(s1.m, s2.m);
            }
        }
        assert_eq!(a.moments.mean_sq_dev, b.moments.mean_sq_dev);
    }

    #[test]
    fn silent_ensemble_moments_have_zero_variance() {
        let cfg = RunConfig {
            n_cells: 48,
            a0: 0.0,
            t_final: 0.1,
            n_windows: 10,
            paths: 3,
            record_every: 5,
            ..Default::default()
        };
        let r = run_ensemble(&cfg).unwrap();
        for k in 0..r.moments.t.len() {
            assert_eq!(r.moments.se_sq_dev[k], 0.0);
            assert_eq!(r.moments.se_eta_star[k], 0.0);
        }
    }
}
