use crate::error::{Result, SelError};
use crate::grid::Grid;
use crate::params::ModelParams;
use crate::state::FieldState;

/// Named initial-data presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Constant,
    Bump,
    TwoBumps,
    VacuumPatch,
}

impl std::str::FromStr for Preset {
    type Err = SelError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Preset::Constant),
            "bump" => Ok(Preset::Bump),
            "two_bumps" => Ok(Preset::TwoBumps),
            "vacuum_patch" => Ok(Preset::VacuumPatch),
            other => Err(SelError::Config(format!(
                "unknown preset '{other}' (expected constant | bump | two_bumps | vacuum_patch)"
            ))),
        }
    }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Raw (un-mollified) preset samples at the cell centers. All presets satisfy
/// 0 <= rho0 <= 0.9 and m0 = 0, admissible for M1 >= 0.9, any M2.
pub fn preset_samples(preset: Preset, grid: &Grid) -> (Vec<f64>, Vec<f64>) {
    let rho: Vec<f64> = grid
        .x_centers
        .iter()
        .map(|&x| match preset {
            Preset::Constant => 0.5,
            // off-center so the slowest Neumann mode is populated
            Preset::Bump => {
                let d = (x - 0.4) / 0.12;
                0.4 + 0.5 * (-d * d).exp()
            }
            Preset::TwoBumps => {
                let d1 = (x - 0.3) / 0.08;
                let d2 = (x - 0.7) / 0.08;
                0.35 + 0.25 * (-d1 * d1).exp() + 0.35 * (-d2 * d2).exp()
            }
            Preset::VacuumPatch => {
                // zero on [0.4, 0.6], smooth rise to 0.8 outside
                let d = (x - 0.5).abs();
                0.8 * smoothstep((d - 0.1) / 0.15)
            }
        })
        .collect();
    let m = vec![0.0; grid.n];
    (rho, m)
}

/// Reads (x, rho0, m0) rows and resamples them onto the cell centers by
/// linear interpolation. Lines starting with '#' and a leading header row are
/// skipped.
pub fn load_initial_csv(path: &std::path::Path, grid: &Grid) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(SelError::Config(format!(
                "initial CSV line {}: expected 3 comma-separated fields, got {}",
                ln + 1,
                fields.len()
            )));
        }
        match (fields[0].parse(), fields[1].parse(), fields[2].parse()) {
            (Ok(x), Ok(r), Ok(m)) => rows.push((x, r, m)),
            _ if ln == 0 => continue, // header row
            _ => {
                return Err(SelError::Config(format!("initial CSV line {}: parse error", ln + 1)));
            }
        }
    }
    if rows.len() < 2 {
        return Err(SelError::Config("initial CSV needs at least 2 data rows".into()));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let interp = |x: f64, get: fn(&(f64, f64, f64)) -> f64| -> f64 {
        let i = rows.partition_point(|r| r.0 < x);
        if i == 0 {
            return get(&rows[0]);
        }
        if i == rows.len() {
            return get(&rows[rows.len() - 1]);
        }
        let (x0, x1) = (rows[i - 1].0, rows[i].0);
        let t = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
        get(&rows[i - 1]) * (1.0 - t) + get(&rows[i]) * t
    };
    let rho = grid.x_centers.iter().map(|&x| interp(x, |r| r.1)).collect();
    let m = grid.x_centers.iter().map(|&x| interp(x, |r| r.2)).collect();
    Ok((rho, m))
}

/// Regularizes raw initial samples: truncates rho below at epsilon, reflects
/// evenly (rho) / oddly (m) across both endpoints, convolves with a truncated
/// Gaussian of standard deviation epsilon, and pins the discrete boundary
/// data (zero end-cell momentum, zero one-sided density difference).
pub fn mollify_initial_data(
    rho0: &[f64],
    m0: &[f64],
    epsilon: f64,
    grid: &Grid,
    params: &ModelParams,
) -> Result<FieldState> {
    let n = grid.n;
    if rho0.len() != n || m0.len() != n {
        return Err(SelError::Precondition(format!(
            "initial samples must have {n} cells, got {} / {}",
            rho0.len(),
            m0.len()
        )));
    }
    for i in 0..n {
        if !(0.0..=params.m1).contains(&rho0[i]) {
            return Err(SelError::Precondition(format!(
                "rho0[{i}] = {} outside [0, M1 = {}]",
                rho0[i], params.m1
            )));
        }
        if m0[i].abs() > params.m2 * rho0[i] + 1e-14 {
            return Err(SelError::Precondition(format!(
                "|m0[{i}]| = {} exceeds M2 * rho0 = {}",
                m0[i].abs(),
                params.m2 * rho0[i]
            )));
        }
    }

    // truncate below; cap the floor so the bound rho <= M1 survives
    let floor = epsilon.min(params.m1);
    let rho_t: Vec<f64> = rho0.iter().map(|&r| r.max(floor)).collect();

    // truncated Gaussian kernel, sd = epsilon, radius 4 sd (>= 1 cell)
    let radius = ((4.0 * epsilon / grid.dx).ceil() as usize).max(1);
    let mut kernel = Vec::with_capacity(2 * radius + 1);
    let sd = epsilon.max(grid.dx * 1e-6);
    for j in -(radius as isize)..=(radius as isize) {
        let y = j as f64 * grid.dx / sd;
        kernel.push((-0.5 * y * y).exp());
    }
    let ksum: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= ksum;
    }

    // reflected lookups: even for rho (mirror about both faces), odd for m
    let rho_ext = |j: isize| -> f64 {
        let n = n as isize;
        if j < 0 {
            rho_t[(-1 - j) as usize]
        } else if j >= n {
            rho_t[(2 * n - 1 - j) as usize]
        } else {
            rho_t[j as usize]
        }
    };
    let m_ext = |j: isize| -> f64 {
        let n = n as isize;
        if j < 0 {
            -m0[(-1 - j) as usize]
        } else if j >= n {
            -m0[(2 * n - 1 - j) as usize]
        } else {
            m0[j as usize]
        }
    };

    let r = radius as isize;
    let mut rho: Vec<f64> = (0..n as isize)
        .map(|i| kernel.iter().enumerate().map(|(k, &w)| w * rho_ext(i + k as isize - r)).sum())
        .collect();
    let mut m: Vec<f64> = (0..n as isize)
        .map(|i| kernel.iter().enumerate().map(|(k, &w)| w * m_ext(i + k as isize - r)).sum())
        .collect();

    // discrete boundary data
    m[0] = 0.0;
    m[n - 1] = 0.0;
    rho[0] = rho[1];
    rho[n - 1] = rho[n - 2];

    FieldState::new(rho, m, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    fn params() -> ModelParams {
        make_params(2.0, 1.0, 1e-2, 0.01, 1.0, 1.0).unwrap()
    }

    #[test]
    fn constant_data_unchanged() {
        let g = Grid::new(100).unwrap();
        let p = params();
        let rho0 = vec![0.5; 100];
        let m0 = vec![0.0; 100];
        let s = mollify_initial_data(&rho0, &m0, 1e-2, &g, &p).unwrap();
        for i in 0..100 {
            assert!((s.rho[i] - 0.5).abs() < 1e-14, "cell {i}: {}", s.rho[i]);
            assert_eq!(s.m[i], 0.0);
        }
    }

    #[test]
    fn output_bounded_by_m1_and_boundary_pinned() {
        let g = Grid::new(200).unwrap();
        let p = params();
        let (rho0, m0) = preset_samples(Preset::TwoBumps, &g);
        let s = mollify_initial_data(&rho0, &m0, 1e-2, &g, &p).unwrap();
        for &r in &s.rho {
            assert!(r <= p.m1 + 1e-12 && r >= 0.0);
        }
        assert_eq!(s.m[0], 0.0);
        assert_eq!(s.m[199], 0.0);
        assert_eq!(s.rho[0], s.rho[1]);
        assert_eq!(s.rho[199], s.rho[198]);
    }

    #[test]
    fn mass_preserved_within_budget() {
        let g = Grid::new(200).unwrap();
        let p = params();
        for preset in [Preset::Bump, Preset::TwoBumps, Preset::VacuumPatch] {
            let (rho0, m0) = preset_samples(preset, &g);
            let mass_in: f64 = rho0.iter().sum::<f64>() * g.dx;
            let s = mollify_initial_data(&rho0, &m0, 1e-2, &g, &p).unwrap();
            let mass_out = s.mass(&g);
            assert!(
                (mass_out - mass_in).abs() <= 2.0 * 1e-2 * p.m1,
                "{preset:?}: mass {mass_in} -> {mass_out}"
            );
        }
    }

    #[test]
    fn vacuum_patch_floored_at_epsilon() {
        let g = Grid::new(200).unwrap();
        let p = params();
        let (rho0, m0) = preset_samples(Preset::VacuumPatch, &g);
        let eps = 1e-3;
        let s = mollify_initial_data(&rho0, &m0, eps, &g, &p).unwrap();
        for &r in &s.rho {
            assert!(r >= eps - 1e-15);
        }
    }

    #[test]
    fn rejects_inadmissible_data() {
        let g = Grid::new(50).unwrap();
        let p = params();
        let too_dense = vec![1.5; 50];
        assert!(mollify_initial_data(&too_dense, &vec![0.0; 50], 1e-2, &g, &p).is_err());
        let rho = vec![0.5; 50];
        let too_fast = vec![0.9; 50]; // |m| > M2 rho = 0.5
        assert!(mollify_initial_data(&rho, &too_fast, 1e-2, &g, &p).is_err());
    }

    #[test]
    fn presets_admissible() {
        let g = Grid::new(128).unwrap();
        for preset in [Preset::Constant, Preset::Bump, Preset::TwoBumps, Preset::VacuumPatch] {
            let (rho0, _) = preset_samples(preset, &g);
            for &r in &rho0 {
                assert!((0.0..=0.91).contains(&r), "{preset:?}: rho {r}");
            }
        }
    }

    #[test]
    fn csv_roundtrip() {
        let g = Grid::new(64).unwrap();
        let dir = std::env::temp_dir().join("sel_init_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("init.csv");
        let mut text = String::from("x,rho0,m0\n");
        for k in 0..=32 {
            let x = k as f64 / 32.0;
            text.push_str(&format!("{x},{},{}\n", 0.5 + 0.1 * x, 0.01 * x));
        }
        std::fs::write(&path, text).unwrap();
        let (rho, m) = load_initial_csv(&path, &g).unwrap();
        assert_eq!(rho.len(), 64);
        // linear data survives linear interpolation
        for (i, &x) in g.x_centers.iter().enumerate() {
            assert!((rho[i] - (0.5 + 0.1 * x)).abs() < 1e-12);
            assert!((m[i] - 0.01 * x).abs() < 1e-12);
        }
    }
}
