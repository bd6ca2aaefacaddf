use crate::det::{DetSolverConfig, FluxScheme};
use crate::error::{Result, SelError};
use crate::grid::Grid;
use crate::init::{load_initial_csv, mollify_initial_data, preset_samples, Preset};
use crate::noise::NoiseSpec;
use crate::params::{make_params, ModelParams};
use crate::splitting::{SplitConfig, SplitMode};
use crate::state::FieldState;
use crate::stoch::StochStepConfig;
use serde::Serialize;
use std::path::PathBuf;

/// A full run description, parsed from plain-text key=value config.
///
/// Recognized keys: gamma, alpha, epsilon, a0, m1, m2, n_cells, seed,
/// t_final, n_windows, paths, record_every, preset, init_csv,
/// mode=interpolated|endpoint, clamp=on|off, cfl, substeps.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub a0: f64,
    pub m1: f64,
    pub m2: f64,
    pub n_cells: usize,
    pub seed: u64,
    pub t_final: f64,
    pub n_windows: usize,
    pub paths: usize,
    /// Record every k-th window endpoint.
    pub record_every: usize,
    pub preset: String,
    pub init_csv: Option<PathBuf>,
    pub mode: String,
    pub clamp: bool,
    pub cfl: f64,
    pub substeps: usize,
    pub flux_scheme: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gamma: 2.0,
            alpha: 1.0,
            epsilon: 1e-3,
            a0: 0.01,
            m1: 1.0,
            m2: 1.0,
            n_cells: 200,
            seed: 12345,
            t_final: 20.0,
            n_windows: 2000,
            paths: 64,
            record_every: 20,
            preset: "bump".into(),
            init_csv: None,
            mode: "endpoint".into(),
            clamp: true,
            cfl: 0.45,
            substeps: 4,
            flux_scheme: "rusanov".into(),
        }
    }
}

impl RunConfig {
    /// Parses key=value lines; '#' starts a comment. Unknown keys and parse
    /// failures are all reported together.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut errors = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(format!("line {}: expected key=value, got '{line}'", ln + 1));
                continue;
            };
            let key = key.trim();
            let value = value.trim();
            let mut bad =
                |what: &str| errors.push(format!("key '{key}': bad {what} value '{value}'"));
            match key {
                "gamma" => value.parse().map(|v| cfg.gamma = v).unwrap_or_else(|_| bad("float")),
                "alpha" => value.parse().map(|v| cfg.alpha = v).unwrap_or_else(|_| bad("float")),
                "epsilon" => value.parse().map(|v| cfg.epsilon = v).unwrap_or_else(|_| bad("float")),
                "a0" => value.parse().map(|v| cfg.a0 = v).unwrap_or_else(|_| bad("float")),
                "m1" => value.parse().map(|v| cfg.m1 = v).unwrap_or_else(|_| bad("float")),
                "m2" => value.parse().map(|v| cfg.m2 = v).unwrap_or_else(|_| bad("float")),
                "n_cells" => value.parse().map(|v| cfg.n_cells = v).unwrap_or_else(|_| bad("integer")),
                "seed" => value.parse().map(|v| cfg.seed = v).unwrap_or_else(|_| bad("integer")),
                "t_final" => value.parse().map(|v| cfg.t_final = v).unwrap_or_else(|_| bad("float")),
                "n_windows" => {
                    value.parse().map(|v| cfg.n_windows = v).unwrap_or_else(|_| bad("integer"))
                }
                "paths" => value.parse().map(|v| cfg.paths = v).unwrap_or_else(|_| bad("integer")),
                "record_every" => {
                    value.parse().map(|v| cfg.record_every = v).unwrap_or_else(|_| bad("integer"))
                }
                "preset" => cfg.preset = value.to_string(),
                "init_csv" => cfg.init_csv = Some(PathBuf::from(value)),
                "mode" => cfg.mode = value.to_string(),
                "clamp" => match value {
                    "on" => cfg.clamp = true,
                    "off" => cfg.clamp = false,
                    _ => bad("on|off"),
                },
                "cfl" => value.parse().map(|v| cfg.cfl = v).unwrap_or_else(|_| bad("float")),
                "flux_scheme" => cfg.flux_scheme = value.to_string(),
                "substeps" => {
                    value.parse().map(|v| cfg.substeps = v).unwrap_or_else(|_| bad("integer"))
                }
                _ => errors.push(format!("unknown key '{key}'")),
            }
        }
        if errors.is_empty() {
            cfg.validate()?;
            Ok(cfg)
        } else {
            Err(SelError::Config(errors.join("; ")))
        }
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Validates against every module's preconditions, listing every
    /// offending key.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if !(self.gamma > 1.0) {
            errors.push(format!("gamma: must be > 1, got {}", self.gamma));
        }
        if !(self.alpha > 0.0) {
            errors.push(format!("alpha: must be > 0, got {}", self.alpha));
        }
        if !(self.epsilon >= 0.0) {
            errors.push(format!("epsilon: must be >= 0, got {}", self.epsilon));
        }
        if !(self.a0 >= 0.0) {
            errors.push(format!("a0: must be >= 0, got {}", self.a0));
        }
        if !(self.m1 > 0.0) {
            errors.push(format!("m1: must be > 0, got {}", self.m1));
        }
        if !(self.m2 > 0.0) {
            errors.push(format!("m2: must be > 0, got {}", self.m2));
        }
        if self.n_cells < 3 {
            errors.push(format!("n_cells: need >= 3, got {}", self.n_cells));
        }
        if !(self.t_final >= 0.0) {
            errors.push(format!("t_final: must be >= 0, got {}", self.t_final));
        }
        if self.n_windows == 0 {
            errors.push("n_windows: must be >= 1".into());
        }
        if self.paths == 0 {
            errors.push("paths: must be >= 1".into());
        }
        if self.record_every == 0 {
            errors.push("record_every: must be >= 1".into());
        }
        if self.substeps == 0 {
            errors.push("substeps: must be >= 1".into());
        }
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            errors.push(format!("cfl: must be in (0, 0.9], got {}", self.cfl));
        }
        if self.preset.parse::<Preset>().is_err() && self.init_csv.is_none() {
            errors.push(format!("preset: unknown '{}' and no init_csv given", self.preset));
        }
        if self.mode.parse::<SplitMode>().is_err() {
            errors.push(format!("mode: expected interpolated|endpoint, got '{}'", self.mode));
        }
        if self.flux_scheme.parse::<FluxScheme>().is_err() {
            errors.push(format!("flux_scheme: unknown '{}'", self.flux_scheme));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(SelError::Config(errors.join("; ")))
        }
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        make_params(self.gamma, self.alpha, self.epsilon, self.a0, self.m1, self.m2)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n_cells)
    }

    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec::new(self.a0, self.m1, self.m2)
    }

    pub fn split(&self) -> Result<SplitConfig> {
        let mode: SplitMode = self.mode.parse()?;
        Ok(SplitConfig::every_k_windows(self.t_final, self.n_windows, self.record_every, mode))
    }

    pub fn det_cfg(&self) -> DetSolverConfig {
        let flux_scheme = self.flux_scheme.parse().unwrap_or_default();
        DetSolverConfig { cfl: self.cfl, flux_scheme, ..DetSolverConfig::default() }
    }

    pub fn stoch_cfg(&self) -> StochStepConfig {
        StochStepConfig { substeps_per_interval: self.substeps, clamp: self.clamp }
    }

    /// Mollified initial state from the preset or CSV.
    pub fn initial_state(&self, grid: &Grid, params: &ModelParams) -> Result<FieldState> {
        let (rho0, m0) = match &self.init_csv {
            Some(path) => load_initial_csv(path, grid)?,
            None => preset_samples(self.preset.parse()?, grid),
        };
        mollify_initial_data(&rho0, &m0, params.epsilon, grid, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_and_overrides() {
        let cfg = RunConfig::parse(
            "gamma = 1.4\nn_cells=100 # comment\npaths= 8\nmode=interpolated\nclamp=off\n",
        )
        .unwrap();
        assert_eq!(cfg.gamma, 1.4);
        assert_eq!(cfg.n_cells, 100);
        assert_eq!(cfg.paths, 8);
        assert_eq!(cfg.mode, "interpolated");
        assert!(!cfg.clamp);
    }

    #[test]
    fn reports_every_offending_key() {
        let err = RunConfig::parse("gamma=0.5\nalpha=-1\nn_cells=1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gamma"), "{msg}");
        assert!(msg.contains("alpha"), "{msg}");
        assert!(msg.contains("n_cells"), "{msg}");
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::parse("flux=weno\n").is_err());
        assert!(RunConfig::parse("gamma=two\n").is_err());
        assert!(RunConfig::parse("clamp=maybe\n").is_err());
        assert!(RunConfig::parse("just a line\n").is_err());
    }

    #[test]
    fn builds_every_component() {
        let cfg = RunConfig { n_cells: 64, ..Default::default() };
        let params = cfg.model_params().unwrap();
        let grid = cfg.grid().unwrap();
        let state = cfg.initial_state(&grid, &params).unwrap();
        assert_eq!(state.n(), 64);
        cfg.split().unwrap().validate().unwrap();
    }
}
