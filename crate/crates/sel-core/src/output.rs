use crate::config::RunConfig;
use crate::error::Result;
use crate::grid::Grid;
use crate::longtime::{DecayFit, MomentSeries};
use crate::splitting::{DiagRow, Trajectory};
use crate::state::FieldState;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// 17 significant digits: round-trip safe for f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

/// series.csv: one row per recorded time with the scalar diagnostics.
pub fn write_series_csv(path: &Path, rows: &[DiagRow]) -> Result<()> {
    let mut s = String::from("t,mass,max_w,min_z,l2_rho_dev,l2_m\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_f64(r.t),
            fmt_f64(r.mass),
            fmt_f64(r.max_w),
            fmt_f64(r.min_z),
            fmt_f64(r.l2_rho_dev),
            fmt_f64(r.l2_m)
        ));
    }
    write_atomic(path, &s)
}

/// fields_t*.csv: per-snapshot cell data (t, x, rho, m).
pub fn write_fields_csv(path: &Path, t: f64, grid: &Grid, state: &FieldState) -> Result<()> {
    let mut s = String::from("t,x,rho,m\n");
    for i in 0..grid.n {
        s.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(t),
            fmt_f64(grid.x_centers[i]),
            fmt_f64(state.rho[i]),
            fmt_f64(state.m[i])
        ));
    }
    write_atomic(path, &s)
}

/// moments.csv: ensemble moment series with standard errors.
pub fn write_moments_csv(path: &Path, m: &MomentSeries) -> Result<()> {
    let mut s = String::from(
        "t,mean_sq_dev,se_sq_dev,mean_eta_star,se_eta_star,mean_eta_star_sq,se_eta_star_sq\n",
    );
    for k in 0..m.t.len() {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_f64(m.t[k]),
            fmt_f64(m.mean_sq_dev[k]),
            fmt_f64(m.se_sq_dev[k]),
            fmt_f64(m.mean_eta_star[k]),
            fmt_f64(m.se_eta_star[k]),
            fmt_f64(m.mean_eta_star_sq[k]),
            fmt_f64(m.se_eta_star_sq[k])
        ));
    }
    write_atomic(path, &s)
}

/// One row of decay_report.csv.
#[derive(Debug, Clone)]
pub struct DecayReportRow {
    pub quantity: String,
    pub fit: DecayFit,
    pub n_paths: usize,
}

pub fn write_decay_report_csv(path: &Path, rows: &[DecayReportRow]) -> Result<()> {
    let mut s = String::from("quantity,window_lo,window_hi,rate,prefactor,r_squared,n_paths\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.quantity,
            fmt_f64(r.fit.window.0),
            fmt_f64(r.fit.window.1),
            fmt_f64(r.fit.rate),
            fmt_f64(r.fit.prefactor),
            fmt_f64(r.fit.r_squared),
            r.n_paths
        ));
    }
    write_atomic(path, &s)
}

/// Immutable record of one run directory.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub artifact_version: String,
    pub command: String,
    pub config: RunConfig,
    pub per_path_seeds: Vec<u64>,
    pub wall_clock_secs: f64,
    pub summaries: serde_json::Map<String, serde_json::Value>,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        RunManifest {
            schema_version: 1,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            per_path_seeds: Vec::new(),
            wall_clock_secs: 0.0,
            summaries: serde_json::Map::new(),
        }
    }

    pub fn summary(&mut self, key: &str, value: serde_json::Value) {
        self.summaries.insert(key.to_string(), value);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| crate::error::SelError::Config(format!("manifest: {e}")))?;
        write_atomic(path, &text)
    }
}

/// Writes the standard run directory for a single trajectory: series.csv and
/// one fields_t*.csv per snapshot.
pub fn write_trajectory(dir: &Path, grid: &Grid, traj: &Trajectory) -> Result<()> {
    write_series_csv(&dir.join("series.csv"), &traj.diagnostics)?;
    for (idx, (t, state)) in traj.snapshots.iter().enumerate() {
        write_fields_csv(&dir.join(format!("fields_t{idx:04}.csv")), *t, grid, state)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_formatting_roundtrips() {
        for x in [0.1, 1.0 / 3.0, 2.5e-17, -7.125, 1e300] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "{s}");
        }
    }

    #[test]
    fn series_csv_shape() {
        let dir = std::env::temp_dir().join("sel_output_test");
        let path = dir.join("series.csv");
        let rows = vec![DiagRow { t: 0.0, mass: 0.5, max_w: 1.0, min_z: -1.0, l2_rho_dev: 0.1, l2_m: 0.0 }];
        write_series_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,mass,max_w,min_z,l2_rho_dev,l2_m\n"));
        assert_eq!(text.lines().count(), 2);
    }
}
