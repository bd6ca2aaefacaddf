use clap::{Parser, Subcommand};
use sel_core::brownian::BrownianPath;
use sel_core::config::RunConfig;
use sel_core::det::compute_invariants;
use sel_core::ensemble::{derive_seed, run_ensemble};
use sel_core::entropy::{EntropyPair, Generator};
use sel_core::error::Result;
use sel_core::longtime::{
    domination_stats, fit_decay, integral_eta_star, noise_threshold_report, LongTimeConstants,
};
use sel_core::output::{
    write_decay_report_csv, write_fields_csv, write_moments_csv, write_series_csv,
    write_trajectory, DecayReportRow, RunManifest,
};
use sel_core::pme::{compare_euler_pme, darcy_momentum, pme_advance, PmeState};
use sel_core::splitting::{entropy_residual, interior_bump, lie_trotter_run, DiagRow};
use sel_core::state::FieldState;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

/// Simulation lab for the 1D stochastic isentropic Euler equations with
/// linear damping.
#[derive(Parser)]
#[command(name = "sel", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single trajectory and write snapshots + series.
    Simulate(CommonArgs),
    /// Run a Monte Carlo ensemble and write per-path series + moments.
    Ensemble(CommonArgs),
    /// Run an ensemble and fit exponential decay rates.
    DecayFit(CommonArgs),
    /// Run the porous-medium reference solver.
    Pme(CommonArgs),
    /// Compare a noisy Euler run against the porous-medium reference.
    Compare(CommonArgs),
    /// Entropy-balance residual refinement study.
    EntropyCheck(EntropyCheckArgs),
    /// Full invariant sweep; exits 2 on any violation.
    InvariantsCheck(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Plain-text key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: ./sel_run).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured ensemble size.
    #[arg(long)]
    paths: Option<usize>,
    /// Override the configured base seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(clap::Args)]
struct EntropyCheckArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Entropy generator: one | xi | half_xi_sq | power:p
    #[arg(long, default_value = "half_xi_sq")]
    generator: String,
}

fn load_config(args: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(p) = args.paths {
        cfg.paths = p;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(args: &CommonArgs) -> PathBuf {
    args.out.clone().unwrap_or_else(|| PathBuf::from("sel_run"))
}

fn single_path(cfg: &RunConfig) -> Result<sel_core::splitting::Trajectory> {
    let params = cfg.model_params()?;
    let grid = cfg.grid()?;
    let noise = cfg.noise();
    let split = cfg.split()?;
    let state0 = cfg.initial_state(&grid, &params)?;
    let dt = split.tau() / cfg.substeps as f64;
    let count = (cfg.t_final / dt).round() as usize;
    let path = BrownianPath::sample(derive_seed(cfg.seed, 0), dt, count)?;
    lie_trotter_run(&state0, &path, &grid, &params, &noise, &split, &cfg.det_cfg(), &cfg.stoch_cfg())
}

fn cmd_simulate(args: &CommonArgs) -> Result<ExitCode> {
    let t0 = Instant::now();
    let cfg = load_config(args)?;
    let dir = out_dir(args);
    let grid = cfg.grid()?;
    let traj = single_path(&cfg)?;
    write_trajectory(&dir, &grid, &traj)?;
    let mut manifest = RunManifest::new("simulate", &cfg);
    manifest.per_path_seeds = vec![derive_seed(cfg.seed, 0)];
    manifest.wall_clock_secs = t0.elapsed().as_secs_f64();
    manifest.summary("clamp_count", traj.clamp.count.into());
    manifest.summary("rho_star", serde_json::json!(traj.rho_star));
    manifest.write(&dir.join("manifest.json"))?;
    println!("simulate: wrote {} snapshots to {}", traj.snapshots.len(), dir.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_ensemble(args: &CommonArgs) -> Result<ExitCode> {
    let t0 = Instant::now();
    let cfg = load_config(args)?;
    let dir = out_dir(args);
    let result = run_ensemble(&cfg)?;
    write_moments_csv(&dir.join("moments.csv"), &result.moments)?;
    // representative path plus per-path series
    write_series_csv(&dir.join("series.csv"), &result.trajectories[0].diagnostics)?;
    for traj in &result.trajectories {
        write_series_csv(
            &dir.join(format!("series_p{:03}.csv", traj.path_index)),
            &traj.diagnostics,
        )?;
    }
    let mut manifest = RunManifest::new("ensemble", &cfg);
    manifest.per_path_seeds = result.per_path_seeds.clone();
    manifest.wall_clock_secs = t0.elapsed().as_secs_f64();
    let terminal = *result.moments.mean_sq_dev.last().unwrap_or(&0.0);
    manifest.summary("terminal_mean_sq_dev", serde_json::json!(terminal));
    manifest.write(&dir.join("manifest.json"))?;
    println!("ensemble: {} paths, terminal mean sq dev {terminal:.3e}", cfg.paths);
    Ok(ExitCode::SUCCESS)
}

fn cmd_decay_fit(args: &CommonArgs) -> Result<ExitCode> {
    let t0 = Instant::now();
    let cfg = load_config(args)?;
    let dir = out_dir(args);
    let result = run_ensemble(&cfg)?;
    let m = &result.moments;
    write_moments_csv(&dir.join("moments.csv"), m)?;

    let window = (2.0_f64.min(0.1 * cfg.t_final), cfg.t_final);
    let series_dev: Vec<(f64, f64)> =
        m.t.iter().cloned().zip(m.mean_sq_dev.iter().cloned()).collect();
    let series_eta2: Vec<(f64, f64)> =
        m.t.iter().cloned().zip(m.mean_eta_star_sq.iter().cloned()).collect();
    let fit_dev = fit_decay(&series_dev, window)?;
    let fit_eta2 = fit_decay(&series_eta2, window)?;

    // per-path decay: fraction with positive fitted rate
    let mut n_positive = 0usize;
    for traj in &result.trajectories {
        let series: Vec<(f64, f64)> =
            traj.diagnostics.iter().map(|d| (d.t, d.l2_rho_dev + d.l2_m)).collect();
        if let Ok(fit) = fit_decay(&series, window) {
            if fit.rate > 0.0 {
                n_positive += 1;
            }
        }
    }
    let frac = n_positive as f64 / result.trajectories.len() as f64;

    let rows = vec![
        DecayReportRow { quantity: "mean_sq_dev".into(), fit: fit_dev, n_paths: m.n_paths },
        DecayReportRow { quantity: "mean_eta_star_sq".into(), fit: fit_eta2, n_paths: m.n_paths },
    ];
    write_decay_report_csv(&dir.join("decay_report.csv"), &rows)?;

    let mut manifest = RunManifest::new("decay_fit", &cfg);
    manifest.per_path_seeds = result.per_path_seeds.clone();
    manifest.wall_clock_secs = t0.elapsed().as_secs_f64();
    manifest.summary("rate_mean_sq_dev", serde_json::json!(fit_dev.rate));
    manifest.summary("r2_mean_sq_dev", serde_json::json!(fit_dev.r_squared));
    manifest.summary("rate_mean_eta_star_sq", serde_json::json!(fit_eta2.rate));
    manifest.summary("r2_mean_eta_star_sq", serde_json::json!(fit_eta2.r_squared));
    manifest.summary("pathwise_positive_rate_fraction", serde_json::json!(frac));
    manifest.write(&dir.join("manifest.json"))?;
    println!(
        "decay_fit: rate {:.4} (R2 {:.4}), eta*^2 rate {:.4} (R2 {:.4}), {:.1}% paths positive",
        fit_dev.rate,
        fit_dev.r_squared,
        fit_eta2.rate,
        fit_eta2.r_squared,
        100.0 * frac
    );
    Ok(ExitCode::SUCCESS)
}

type PmeRecord = (Vec<(f64, PmeState)>, Vec<DiagRow>);

fn pme_record(cfg: &RunConfig) -> Result<PmeRecord> {
    let params = cfg.model_params()?;
    let grid = cfg.grid()?;
    let state0 = cfg.initial_state(&grid, &params)?;
    let split = cfg.split()?;
    let rho_star = state0.mass(&grid);
    let mut s = PmeState::new(state0.rho.clone(), 0.0)?;
    let mut snaps = Vec::new();
    let mut rows = Vec::new();
    for &t in &split.record_times {
        s = pme_advance(&s, t, &grid, &params, 0.45)?;
        let m = darcy_momentum(&s, &grid, &params);
        let fs = FieldState { rho: s.rho.clone(), m, t };
        let (_, _, max_w, min_z) = compute_invariants(&fs, &params, 1e-10);
        let mut dev = 0.0;
        let mut l2m = 0.0;
        for i in 0..grid.n {
            dev += (fs.rho[i] - rho_star) * (fs.rho[i] - rho_star);
            l2m += fs.m[i] * fs.m[i];
        }
        rows.push(DiagRow {
            t,
            mass: s.mass(&grid),
            max_w,
            min_z,
            l2_rho_dev: dev * grid.dx,
            l2_m: l2m * grid.dx,
        });
        snaps.push((t, s.clone()));
    }
    Ok((snaps, rows))
}

fn cmd_pme(args: &CommonArgs) -> Result<ExitCode> {
    let t0 = Instant::now();
    let cfg = load_config(args)?;
    let dir = out_dir(args);
    let grid = cfg.grid()?;
    let params = cfg.model_params()?;
    let (snaps, rows) = pme_record(&cfg)?;
    write_series_csv(&dir.join("series.csv"), &rows)?;
    for (idx, (t, s)) in snaps.iter().enumerate() {
        let m = darcy_momentum(s, &grid, &params);
        let fs = FieldState { rho: s.rho.clone(), m, t: *t };
        write_fields_csv(&dir.join(format!("fields_t{idx:04}.csv")), *t, &grid, &fs)?;
    }
    let mut manifest = RunManifest::new("pme", &cfg);
    manifest.wall_clock_secs = t0.elapsed().as_secs_f64();
    manifest.write(&dir.join("manifest.json"))?;
    println!("pme: wrote {} snapshots to {}", snaps.len(), dir.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(args: &CommonArgs) -> Result<ExitCode> {
    let t0 = Instant::now();
    let cfg = load_config(args)?;
    let dir = out_dir(args);
    let grid = cfg.grid()?;
    let params = cfg.model_params()?;
    let traj = single_path(&cfg)?;
    let (snaps, _) = pme_record(&cfg)?;
    let series = compare_euler_pme(&traj, &snaps, &grid, &params)?;
    let mut text = String::from("t,sq_dev\n");
    for (t, v) in &series {
        text.push_str(&format!(
            "{},{}\n",
            sel_core::output::fmt_f64(*t),
            sel_core::output::fmt_f64(*v)
        ));
    }
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("compare.csv"), text)?;
    let initial = series.iter().find(|(_, v)| *v > 0.0).map(|&(_, v)| v).unwrap_or(0.0);
    let terminal = series.last().map(|&(_, v)| v).unwrap_or(0.0);
    let mut manifest = RunManifest::new("compare", &cfg);
    manifest.wall_clock_secs = t0.elapsed().as_secs_f64();
    manifest.summary("initial_sq_dev", serde_json::json!(initial));
    manifest.summary("terminal_sq_dev", serde_json::json!(terminal));
    manifest.write(&dir.join("manifest.json"))?;
    println!("compare: sq dev {initial:.3e} -> {terminal:.3e}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_entropy_check(args: &EntropyCheckArgs) -> Result<ExitCode> {
    let t0 = Instant::now();
    let generator = Generator::parse(&args.generator)?;
    let args = &args.common;
    let cfg = load_config(args)?;
    let dir = out_dir(args);
    // three simultaneous refinements of (n, N, substeps)
    let mut rows_text = String::from("level,n_cells,n_windows,substeps,total_defect,l1\n");
    let mut defects = Vec::new();
    for level in 0..3u32 {
        let f = 1usize << level;
        let lvl_cfg = RunConfig {
            n_cells: cfg.n_cells * f,
            n_windows: cfg.n_windows * f,
            substeps: cfg.substeps * f,
            ..cfg.clone()
        };
        let params = lvl_cfg.model_params()?;
        let grid = lvl_cfg.grid()?;
        let noise = lvl_cfg.noise();
        let split = lvl_cfg.split()?;
        let state0 = lvl_cfg.initial_state(&grid, &params)?;
        let pair = EntropyPair::with_defaults(generator, &params);
        let phi = interior_bump(&grid);
        // one coarse draw at the base resolution, refined per level so every
        // level sees the same Brownian motion
        let base_dt = (cfg.t_final / cfg.n_windows as f64) / cfg.substeps as f64;
        let base_count = (cfg.t_final / base_dt).round() as usize;
        let mut path = BrownianPath::sample(derive_seed(cfg.seed, 0), base_dt, base_count)?;
        let dt = split.tau() / lvl_cfg.substeps as f64;
        while path.dt > dt * (1.0 + 1e-9) {
            path = path.refine();
        }
        let rep = entropy_residual(
            &state0,
            &path,
            &grid,
            &params,
            &noise,
            &split,
            &lvl_cfg.det_cfg(),
            &lvl_cfg.stoch_cfg(),
            &pair,
            &phi,
        )?;
        rows_text.push_str(&format!(
            "{level},{},{},{},{},{}\n",
            lvl_cfg.n_cells,
            lvl_cfg.n_windows,
            lvl_cfg.substeps,
            sel_core::output::fmt_f64(rep.total_defect),
            sel_core::output::fmt_f64(rep.l1)
        ));
        defects.push(rep.total_defect);
    }
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("entropy_residuals.csv"), &rows_text)?;
    let monotone = defects.windows(2).all(|w| w[1] < w[0]);
    let mut manifest = RunManifest::new("entropy_check", &cfg);
    manifest.wall_clock_secs = t0.elapsed().as_secs_f64();
    manifest.summary("defects", serde_json::json!(defects));
    manifest.summary("monotone", serde_json::json!(monotone));
    manifest.write(&dir.join("manifest.json"))?;
    println!("entropy_check: defects {defects:?} monotone={monotone}");
    Ok(if monotone { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_invariants_check(args: &CommonArgs) -> Result<ExitCode> {
    let t0 = Instant::now();
    let cfg = load_config(args)?;
    let dir = out_dir(args);
    let grid = cfg.grid()?;
    let params = cfg.model_params()?;
    let result = run_ensemble(&cfg)?;
    let mut violations: Vec<String> = Vec::new();

    let mut max_rho_run: f64 = 0.0;
    for traj in &result.trajectories {
        let d0 = &traj.diagnostics[0];
        for row in &traj.diagnostics {
            if (row.mass - d0.mass).abs() > 1e-10 {
                violations.push(format!(
                    "path {}: mass drift {} at t = {}",
                    traj.path_index,
                    row.mass - d0.mass,
                    row.t
                ));
            }
            if row.max_w > d0.max_w + 1e-6 {
                violations.push(format!(
                    "path {}: max w {} exceeds initial envelope {} at t = {}",
                    traj.path_index, row.max_w, d0.max_w, row.t
                ));
            }
            if row.min_z < d0.min_z - 1e-6 {
                violations.push(format!(
                    "path {}: min z {} fell below initial envelope {} at t = {}",
                    traj.path_index, row.min_z, d0.min_z, row.t
                ));
            }
        }
        for (t, state) in &traj.snapshots {
            let eta = integral_eta_star(state, traj.rho_star, &params, &grid);
            if eta < -1e-12 {
                violations.push(format!(
                    "path {}: int eta* = {eta} < 0 at t = {t}",
                    traj.path_index
                ));
            }
            max_rho_run =
                max_rho_run.max(state.rho.iter().cloned().fold(0.0, f64::max));
        }
    }

    // domination sweep across all snapshots
    let rho_star = result.trajectories[0].rho_star;
    let consts = LongTimeConstants::from_run(
        &params,
        rho_star,
        max_rho_run,
        LongTimeConstants::default_m_scale(&params),
    )?;
    let mut c_dom: f64 = 0.0;
    for traj in &result.trajectories {
        for (t, state) in &traj.snapshots {
            let (ratio, min_den) = domination_stats(state, &consts, &params, &grid);
            if !ratio.is_finite() {
                violations.push(format!("path {}: domination ratio not finite at t = {t}", traj.path_index));
            }
            if min_den < -1e-12 {
                violations.push(format!(
                    "path {}: Gronwall integrand went negative ({min_den}) at t = {t}",
                    traj.path_index
                ));
            }
            c_dom = c_dom.max(ratio);
        }
    }
    let regime = noise_threshold_report(&params, c_dom);

    // when alpha != 1 the two printed forms of the functional differ; track
    // both at the terminal state of path 0
    let q_forms = {
        let traj = &result.trajectories[0];
        let (t, state) = traj.snapshots.last().expect("trajectory has snapshots");
        sel_core::longtime::compute_q_forms(state, *t, &consts, &params, &grid)
    };

    let mut manifest = RunManifest::new("invariants_check", &cfg);
    manifest.per_path_seeds = result.per_path_seeds.clone();
    manifest.wall_clock_secs = t0.elapsed().as_secs_f64();
    manifest.summary("violations", serde_json::json!(violations));
    manifest.summary("domination_constant", serde_json::json!(c_dom));
    manifest.summary("noise_regime", serde_json::json!(format!("{:?}", regime.regime)));
    manifest.summary("c_tilde", serde_json::json!(regime.c_tilde));
    manifest.summary("q_terminal_alpha_half_y2", serde_json::json!(q_forms.0));
    manifest.summary("q_terminal_half_y2", serde_json::json!(q_forms.1));
    manifest.write(&dir.join("manifest.json"))?;

    if violations.is_empty() {
        println!("invariants_check: all checks passed (C_dom = {c_dom:.3e}, regime {:?})", regime.regime);
        Ok(ExitCode::SUCCESS)
    } else {
        for v in &violations {
            eprintln!("violation: {v}");
        }
        Ok(ExitCode::from(2))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Result<ExitCode> {
        match &cli.command {
            Command::Simulate(a) => cmd_simulate(a),
            Command::Ensemble(a) => cmd_ensemble(a),
            Command::DecayFit(a) => cmd_decay_fit(a),
            Command::Pme(a) => cmd_pme(a),
            Command::Compare(a) => cmd_compare(a),
            Command::EntropyCheck(a) => cmd_entropy_check(a),
            Command::InvariantsCheck(a) => cmd_invariants_check(a),
        }
    };
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
