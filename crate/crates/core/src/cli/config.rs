//! Run configuration: one TOML file, sections addressed by dotted keys.

use crate::lattice::{LatticePoint, PotentialSpec, Profile};
use crate::scattering::Backend;
use crate::spectra::MuMode;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSection,
    pub gp: GpSection,
    #[serde(default)]
    pub sector: SectorSection,
    #[serde(default)]
    pub mu: MuSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub growth: GrowthSection,
    #[serde(default)]
    pub trial: TrialSection,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    #[serde(default = "default_profile")]
    pub profile: Profile,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "one")]
    pub height: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GpSection {
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "N_list", default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(default = "default_cutoff_factor")]
    pub cutoff_factor: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SectorSection {
    /// Defaults to `N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_min: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub total_momentum: LatticePoint,
    /// Radius of the Fock-space momentum set in units of `2π`.
    #[serde(default = "one")]
    pub mode_cutoff: f64,
}

impl Default for SectorSection {
    fn default() -> Self {
        Self { n_min: None, n_max: None, total_momentum: [0; 3], mode_cutoff: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MuKind {
    EightPiA,
    Explicit,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MuSection {
    pub mode: MuKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

impl Default for MuSection {
    fn default() -> Self {
        Self { mode: MuKind::EightPiA, value: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_tol")]
    pub tol_linear: f64,
    #[serde(default = "default_tol")]
    pub tol_eigen: f64,
    #[serde(default = "default_tol")]
    pub tol_unitary: f64,
    #[serde(default = "default_dim_cap")]
    pub dim_cap: usize,
    #[serde(default = "default_backend")]
    pub backend: Backend,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            tol_linear: default_tol(),
            tol_eigen: default_tol(),
            tol_unitary: default_tol(),
            dim_cap: default_dim_cap(),
            backend: default_backend(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GrowthSection {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_t_points")]
    pub t_points: usize,
}

impl Default for GrowthSection {
    fn default() -> Self {
        Self { trials: default_trials(), t_points: default_t_points() }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrialSection {
    /// Couplings for the trial-energy table; empty means `potential.kappa` only.
    #[serde(default)]
    pub kappa_list: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_dir(), formats: default_formats() }
    }
}

fn default_profile() -> Profile {
    Profile::UniformBall
}
fn one() -> f64 {
    1.0
}
fn default_cutoff_factor() -> f64 {
    4.0
}
fn default_tol() -> f64 {
    1e-10
}
fn default_dim_cap() -> usize {
    crate::fock::DEFAULT_DIM_CAP
}
fn default_backend() -> Backend {
    Backend::Auto
}
fn default_trials() -> usize {
    200
}
fn default_t_points() -> usize {
    11
}
fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.potential().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.gp.n.is_none() && self.gp.n_list.as_ref().is_none_or(|l| l.is_empty()) {
            return bad("gp.N or a nonempty gp.N_list is required".into());
        }
        if self.n_list().contains(&0) {
            return bad("gp.N must be positive".into());
        }
        if !(self.gp.cutoff_factor >= 1.0) {
            return bad(format!("gp.cutoff_factor must be at least 1, got {}", self.gp.cutoff_factor));
        }
        let s = &self.solver;
        for (name, tol) in [("tol_linear", s.tol_linear), ("tol_eigen", s.tol_eigen), ("tol_unitary", s.tol_unitary)] {
            if !(tol > 0.0 && tol.is_finite()) {
                return bad(format!("solver.{name} must be positive, got {tol}"));
            }
        }
        if s.dim_cap == 0 {
            return bad("solver.dim_cap must be positive".into());
        }
        let (lo, hi) = self.n_range();
        if hi < lo {
            return bad(format!("sector.n_max ({hi}) is below sector.n_min ({lo})"));
        }
        if hi > u8::MAX as usize {
            return bad(format!("sector.n_max must not exceed {}", u8::MAX));
        }
        if !(self.sector.mode_cutoff >= 1.0 && self.sector.mode_cutoff.is_finite()) {
            return bad("sector.mode_cutoff must be at least 1".into());
        }
        match (self.mu.mode, self.mu.value) {
            (MuKind::Explicit, None) => return bad("mu.value is required when mu.mode = \"explicit\"".into()),
            (MuKind::EightPiA, Some(_)) => return bad("mu.value is only allowed when mu.mode = \"explicit\"".into()),
            (MuKind::Explicit, Some(v)) if !v.is_finite() => return bad("mu.value must be finite".into()),
            _ => {}
        }
        if self.trial.kappa_list.iter().any(|k| !(*k >= 0.0 && k.is_finite())) {
            return bad("trial.kappa_list entries must be nonnegative".into());
        }
        if self.growth.trials == 0 || self.growth.t_points == 0 {
            return bad("growth.trials and growth.t_points must be positive".into());
        }
        if self.output.formats.is_empty() {
            return bad("output.formats must name at least one of csv, json".into());
        }
        Ok(())
    }

    pub fn potential(&self) -> PotentialSpec {
        let p = &self.potential;
        PotentialSpec { profile: p.profile, radius: p.radius, height: p.height, kappa: p.kappa }
    }

    /// `gp.N`, falling back to the first entry of `gp.N_list`.
    pub fn n(&self) -> usize {
        self.gp.n.or_else(|| self.gp.n_list.as_ref().and_then(|l| l.first().copied())).unwrap_or(0)
    }

    /// `gp.N_list`, falling back to `[gp.N]`.
    pub fn n_list(&self) -> Vec<usize> {
        self.gp.n_list.clone().unwrap_or_else(|| self.gp.n.into_iter().collect())
    }

    pub fn n_range(&self) -> (usize, usize) {
        let n = self.n();
        let lo = self.sector.n_min.unwrap_or(n);
        (lo, self.sector.n_max.unwrap_or(lo.max(n)))
    }

    pub fn mu_mode(&self) -> MuMode {
        match self.mu.mode {
            MuKind::EightPiA => MuMode::EightPiA,
            MuKind::Explicit => MuMode::Explicit(self.mu.value.unwrap_or(0.0)),
        }
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }

    pub fn kappa_list(&self) -> Vec<f64> {
        if self.trial.kappa_list.is_empty() {
            vec![self.potential.kappa]
        } else {
            self.trial.kappa_list.clone()
        }
    }
}
