//! TOML scenario files.
//!
//! A file may name a `preset`; its own keys are then merged over the
//! preset's configuration (tables merge key by key, everything else is
//! replaced).

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::presets;
use crate::dynamics::{ModelParams, SolverOptions, StepController, TimeScheme};
use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use crate::ic::InitialCondition;
use crate::kernel::{KernelMatrix, KernelSpec};

/// One simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub grid: GridConfig,
    pub model: ModelConfig,
    /// Defaults to near-uniform unit mass per species.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ic: Option<InitialCondition>,
    pub time: TimeConfig,
    #[serde(default)]
    pub limits: LimitsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub half_lengths: Vec<f64>,
    pub points: Vec<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            half_lengths: vec![0.5, 0.5],
            points: vec![128, 128],
        }
    }
}

/// A kernel for every pair, or one matrix entry per pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelsConfig {
    Matrix(Vec<Vec<KernelSpec>>),
    Uniform(KernelSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Number of species; inferred from `diffusion` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub species: Option<usize>,
    pub diffusion: Vec<f64>,
    pub gamma: Vec<Vec<f64>>,
    pub kernels: KernelsConfig,
    #[serde(default = "default_true")]
    pub clamp: bool,
    #[serde(default)]
    pub scheme: TimeScheme,
    #[serde(default)]
    pub dealias: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    #[serde(default = "default_dt_min")]
    pub dt_min: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_diffusive_safety")]
    pub diffusive_safety: f64,
    /// Diagnostics cadence; defaults to `t_end / 100`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_every: Option<f64>,
    /// Snapshot cadence, a multiple of `series_every`. Without it only the
    /// first and last states are written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    #[serde(default = "default_ceiling")]
    pub linf_ceiling: f64,
}

impl Default for LimitsConfig {
    fn default() -> Self {
        Self {
            linf_ceiling: default_ceiling(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Series,
    Snapshots,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

fn default_true() -> bool {
    true
}
fn default_dt_max() -> f64 {
    1e-2
}
fn default_dt_min() -> f64 {
    1e-12
}
fn default_cfl() -> f64 {
    0.25
}
fn default_diffusive_safety() -> f64 {
    0.5
}
fn default_ceiling() -> f64 {
    1e8
}
fn default_directory() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Series, OutputFormat::Snapshots]
}

/// Parses, expands presets, fills defaults and validates.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string()))?;
    if let Some(name) = table.remove("preset") {
        let name = name
            .as_str()
            .ok_or_else(|| Error::config("preset", "must be a string"))?
            .to_owned();
        let base = presets::preset(&name)?;
        let mut merged = match toml::Value::try_from(&base) {
            Ok(toml::Value::Table(t)) => t,
            _ => return Err(Error::ConfigParse(format!("preset `{name}` does not serialize to a table"))),
        };
        merge(&mut merged, table);
        table = merged;
    }
    from_table(table)
}

fn from_table(table: toml::Table) -> Result<ScenarioConfig> {
    let config: ScenarioConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let key = e.path().to_string();
        Error::ConfigValue {
            key: if key == "." { "(root)".into() } else { key },
            message: e.into_inner().to_string(),
        }
    })?;
    config.finalized()
}

fn merge(base: &mut toml::Table, overrides: toml::Table) {
    for (key, value) in overrides {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

impl ScenarioConfig {
    pub fn species(&self) -> usize {
        self.model.species.unwrap_or(self.model.diffusion.len())
    }

    /// Fills derived defaults and checks cross-field consistency.
    pub fn finalized(mut self) -> Result<Self> {
        let n = self.species();
        if self.model.species.is_some_and(|s| s != self.model.diffusion.len()) {
            return Err(Error::config(
                "model.diffusion",
                format!("expected {n} entries, got {}", self.model.diffusion.len()),
            ));
        }
        self.model.species = Some(n);
        if let KernelsConfig::Uniform(spec) = self.model.kernels {
            self.model.kernels = KernelsConfig::Matrix(vec![vec![spec; n]; n]);
        }
        if self.ic.is_none() {
            self.ic = Some(InitialCondition::UniformNoise {
                masses: vec![1.0; n],
                amplitude: 0.01,
                seed: 0,
            });
        }
        if self.time.series_every.is_none() {
            self.time.series_every = Some(self.time.t_end / 100.0);
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let grid = self.build_grid()?;
        let n = self.species();
        if n == 0 {
            return Err(Error::config("model.diffusion", "at least one species is required"));
        }
        if let Some(d) = self.model.diffusion.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::config("model.diffusion", format!("entries must be positive, got {d}")));
        }
        if self.model.gamma.len() != n || self.model.gamma.iter().any(|row| row.len() != n) {
            let shape = format!(
                "{}x{}",
                self.model.gamma.len(),
                self.model.gamma.first().map_or(0, Vec::len)
            );
            return Err(Error::config("model.gamma", format!("must be {n}x{n}, got {shape}")));
        }
        if self.model.gamma.iter().flatten().any(|g| !g.is_finite()) {
            return Err(Error::config("model.gamma", "entries must be finite"));
        }
        let kernels = self.kernel_matrix();
        if !kernels.is_square(n) {
            return Err(Error::config("model.kernels", format!("must be {n}x{n}")));
        }
        kernels
            .validate(&grid)
            .map_err(|e| Error::config("model.kernels", e.to_string()))?;

        let ic = self.initial_condition();
        if ic.masses().len() != n {
            return Err(Error::config(
                "ic.masses",
                format!("expected {n} entries, got {}", ic.masses().len()),
            ));
        }
        ic.build(&Arc::new(grid.clone()))?;

        let t = &self.time;
        positive("time.t_end", t.t_end)?;
        positive("time.dt_max", t.dt_max)?;
        positive("time.dt_min", t.dt_min)?;
        positive("time.cfl", t.cfl)?;
        positive("time.diffusive_safety", t.diffusive_safety)?;
        if t.dt_min >= t.dt_max {
            return Err(Error::config("time.dt_min", "must be smaller than time.dt_max"));
        }
        let series = self.series_every();
        positive("time.series_every", series)?;
        if series > t.t_end {
            return Err(Error::config("time.series_every", "must not exceed time.t_end"));
        }
        if let Some(snap) = t.snapshot_every {
            positive("time.snapshot_every", snap)?;
            let ratio = snap / series;
            if ratio < 0.5 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
                return Err(Error::config(
                    "time.snapshot_every",
                    "must be a whole multiple of time.series_every",
                ));
            }
        }
        positive("limits.linf_ceiling", self.limits.linf_ceiling)?;
        Ok(())
    }

    pub fn build_grid(&self) -> Result<TorusGrid> {
        let g = &self.grid;
        if !(1..=2).contains(&g.dim) {
            return Err(Error::config("grid.dim", format!("must be 1 or 2, got {}", g.dim)));
        }
        if g.half_lengths.len() != g.dim {
            return Err(Error::config("grid.half_lengths", format!("expected {} entries", g.dim)));
        }
        if g.points.len() != g.dim {
            return Err(Error::config("grid.points", format!("expected {} entries", g.dim)));
        }
        TorusGrid::with_dim(g.dim, &g.half_lengths, &g.points).map_err(|e| {
            let key = if e.to_string().contains("point") {
                "grid.points"
            } else {
                "grid.half_lengths"
            };
            Error::config(key, e.to_string())
        })
    }

    pub fn kernel_matrix(&self) -> KernelMatrix {
        match &self.model.kernels {
            KernelsConfig::Matrix(m) => KernelMatrix(m.clone()),
            KernelsConfig::Uniform(spec) => KernelMatrix::uniform(self.species(), *spec),
        }
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            diffusion: self.model.diffusion.clone(),
            gamma: self.model.gamma.clone(),
            kernels: self.kernel_matrix(),
            clamp: self.model.clamp,
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            scheme: self.model.scheme,
            dealias: self.model.dealias,
        }
    }

    pub fn initial_condition(&self) -> InitialCondition {
        self.ic.clone().unwrap_or(InitialCondition::UniformNoise {
            masses: vec![1.0; self.species()],
            amplitude: 0.01,
            seed: 0,
        })
    }

    pub fn series_every(&self) -> f64 {
        self.time.series_every.unwrap_or(self.time.t_end / 100.0)
    }

    /// Number of series intervals between snapshots.
    pub fn snapshot_stride(&self) -> Option<u64> {
        self.time
            .snapshot_every
            .map(|s| (s / self.series_every()).round() as u64)
    }

    pub fn controller(&self) -> StepController {
        StepController {
            cfl: self.time.cfl,
            dt_max: self.time.dt_max,
            dt_min: self.time.dt_min,
            linf_ceiling: self.limits.linf_ceiling,
            diffusive_safety: self.time.diffusive_safety,
            sample_every: Some(self.series_every()),
        }
    }

    pub fn wants(&self, format: OutputFormat) -> bool {
        self.output.formats.contains(&format)
    }

    /// Canonical TOML text of the resolved configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario configs always serialize")
    }

    /// SHA-256 of [`Self::to_toml`], hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Replaces the noise seed (no effect on bump data).
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.ic = Some(self.initial_condition().with_seed(seed));
        self
    }
}

fn positive(key: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be positive and finite, got {value}")))
    }
}
