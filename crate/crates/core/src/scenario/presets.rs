//! Named scenarios: the figure parameter sets and the blow-up dichotomy.
//!
//! Figure presets share a 128x128 grid on the unit torus `[-1/2, 1/2)^2`
//! and start from seeded near-uniform noise. Their masses are set so that
//! the uniform state is linearly unstable with leading growth rate 0.25,
//! which places the onset of aggregation at comparable times (t of order
//! 20 to 30) across presets.

use super::config::{GridConfig, KernelsConfig, LimitsConfig, ModelConfig, OutputConfig, ScenarioConfig, TimeConfig};
use crate::dynamics::TimeScheme;
use crate::error::{Error, Result};
use crate::ic::InitialCondition;
use crate::kernel::KernelSpec;

struct Entry {
    name: &'static str,
    summary: &'static str,
    build: fn() -> ScenarioConfig,
}

const REGISTRY: &[Entry] = &[
    Entry { name: "fig1a", summary: "one species, cosine kernel r = 0.3", build: fig1a },
    Entry { name: "fig1b", summary: "one species, cosine kernel r = 0.2", build: fig1b },
    Entry { name: "fig1c", summary: "two species, all gamma = -1, r = 0.3", build: fig1c },
    Entry { name: "fig1d", summary: "two species, all gamma = -1, r = 0.2", build: fig1d },
    Entry { name: "fig1e", summary: "three species, all gamma = -1, r = 0.3", build: fig1e },
    Entry { name: "fig1f", summary: "three species, all gamma = -1, r = 0.2", build: fig1f },
    Entry { name: "fig2a", summary: "two species, self -5, cross -1, r = 0.3", build: fig2a },
    Entry { name: "fig2b", summary: "two species, self -5, cross -1, r = 0.2", build: fig2b },
    Entry { name: "fig3a", summary: "two species, cross -1.2 only, r = (0.4, 0.3)", build: fig3a },
    Entry { name: "fig3b", summary: "two species, cross -1.2 only, r = (0.4, 0.1)", build: fig3b },
    Entry { name: "fig4a", summary: "three species, mixed signs, r = (0.4, 0.3, 0.3)", build: fig4a },
    Entry { name: "fig4b", summary: "three species, mixed signs, r = (0.4, 0.3, 0.1)", build: fig4b },
    Entry { name: "case1-blowup", summary: "local, one species, gamma = -2.5 below the threshold -2", build: case1_blowup },
    Entry { name: "case1-safe", summary: "local, one species, gamma = -0.5", build: case1_safe },
    Entry { name: "case2-blowup", summary: "local, two species, self -4.5 below the threshold -4", build: case2_blowup },
    Entry { name: "case2-safe", summary: "local, two species, self -0.5", build: case2_safe },
];

const FIGURE_NOTES: &str = "\
The domain size and initial data are not given with the figures. This preset
uses the unit torus [-1/2, 1/2)^2 and seeded near-uniform noise of amplitude
0.01. The masses put the uniform state's leading linear growth rate at 0.25.
Snapshots every 1.0 up to t = 100 are a choice, not a match to figure times.";

const CASE_NOTES: &str = "\
Local-kernel blow-up dichotomy on the 64x64 unit torus with unit mass per
species; gamma sits 0.5 beyond (blowup) or well inside (safe) the threshold.";

/// Names of all presets, in registry order.
pub fn preset_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|e| e.name).collect()
}

/// `(name, one-line summary)` for listings.
pub fn preset_summaries() -> Vec<(&'static str, &'static str)> {
    REGISTRY.iter().map(|e| (e.name, e.summary)).collect()
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let entry = find(name)?;
    let config = (entry.build)();
    config.finalized()
}

/// Preset as commented TOML that parses back to the same config.
pub fn emit_preset(name: &str) -> Result<String> {
    let entry = find(name)?;
    let config = preset(name)?;
    let notes = if name.starts_with("case") { CASE_NOTES } else { FIGURE_NOTES };
    let mut text = format!("# preset {name}: {}\n#\n", entry.summary);
    for line in notes.lines() {
        text.push_str("# ");
        text.push_str(line);
        text.push('\n');
    }
    if name == "fig4a" || name == "fig4b" {
        text.push_str("# gamma_23 = gamma_32 = -1 (the printed caption drops the '=').\n");
    }
    if name.starts_with("fig2") {
        text.push_str("# Cross terms are negative, so the two-species blow-up condition does not hold.\n");
    }
    text.push('\n');
    text.push_str(&config.to_toml());
    Ok(text)
}

fn find(name: &str) -> Result<&'static Entry> {
    REGISTRY.iter().find(|e| e.name == name).ok_or_else(|| Error::UnknownPreset {
        name: name.to_owned(),
        available: preset_names().into_iter().map(String::from).collect(),
    })
}

fn cosine(radius: f64) -> KernelSpec {
    KernelSpec::CosineBump { radius }
}

/// Row `i` of the kernel matrix uses radius `radii[i]`.
fn row_radii(radii: &[f64]) -> KernelsConfig {
    KernelsConfig::Matrix(
        radii
            .iter()
            .map(|&r| vec![cosine(r); radii.len()])
            .collect(),
    )
}

fn figure(name: &str, gamma: Vec<Vec<f64>>, kernels: KernelsConfig, mass_each: f64, seed: u64) -> ScenarioConfig {
    let n = gamma.len();
    ScenarioConfig {
        name: Some(name.to_owned()),
        grid: GridConfig::default(),
        model: ModelConfig {
            species: Some(n),
            diffusion: vec![1.0; n],
            gamma,
            kernels,
            clamp: true,
            scheme: TimeScheme::IfRk2,
            dealias: false,
        },
        ic: Some(InitialCondition::UniformNoise {
            masses: vec![mass_each; n],
            amplitude: 0.01,
            seed,
        }),
        time: TimeConfig {
            t_end: 100.0,
            dt_max: 1e-3,
            dt_min: 1e-12,
            cfl: 0.5,
            diffusive_safety: 0.5,
            series_every: Some(0.1),
            snapshot_every: Some(1.0),
        },
        limits: LimitsConfig::default(),
        output: OutputConfig::default(),
    }
}

fn all(n: usize, g: f64) -> Vec<Vec<f64>> {
    vec![vec![g; n]; n]
}

fn split(n: usize, self_g: f64, cross: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { self_g } else { cross }).collect())
        .collect()
}

fn fig4_gamma() -> Vec<Vec<f64>> {
    vec![vec![1.0, 1.0, 1.0], vec![1.0, -1.0, -1.0], vec![1.0, -1.0, -1.0]]
}

fn fig1a() -> ScenarioConfig {
    figure("fig1a", all(1, -1.0), row_radii(&[0.3]), 1.2425, 1)
}
fn fig1b() -> ScenarioConfig {
    figure("fig1b", all(1, -1.0), row_radii(&[0.2]), 1.1041, 1)
}
fn fig1c() -> ScenarioConfig {
    figure("fig1c", all(2, -1.0), row_radii(&[0.3, 0.3]), 0.6213, 1)
}
fn fig1d() -> ScenarioConfig {
    figure("fig1d", all(2, -1.0), row_radii(&[0.2, 0.2]), 0.5520, 1)
}
fn fig1e() -> ScenarioConfig {
    figure("fig1e", all(3, -1.0), row_radii(&[0.3, 0.3, 0.3]), 0.4142, 1)
}
fn fig1f() -> ScenarioConfig {
    figure("fig1f", all(3, -1.0), row_radii(&[0.2, 0.2, 0.2]), 0.3680, 1)
}
fn fig2a() -> ScenarioConfig {
    figure("fig2a", split(2, -5.0, -1.0), row_radii(&[0.3, 0.3]), 0.2071, 1)
}
fn fig2b() -> ScenarioConfig {
    figure("fig2b", split(2, -5.0, -1.0), row_radii(&[0.2, 0.2]), 0.1840, 1)
}
fn fig3a() -> ScenarioConfig {
    figure("fig3a", split(2, 0.0, -1.2), row_radii(&[0.4, 0.3]), 1.1274, 1)
}
fn fig3b() -> ScenarioConfig {
    figure("fig3b", split(2, 0.0, -1.2), row_radii(&[0.4, 0.1]), 1.0263, 1)
}
fn fig4a() -> ScenarioConfig {
    figure("fig4a", fig4_gamma(), row_radii(&[0.4, 0.3, 0.3]), 0.4962, 1)
}
fn fig4b() -> ScenarioConfig {
    figure("fig4b", fig4_gamma(), row_radii(&[0.4, 0.3, 0.1]), 0.4555, 1)
}

fn local(name: &str, gamma: Vec<Vec<f64>>, ic: InitialCondition, series_every: f64) -> ScenarioConfig {
    let n = gamma.len();
    ScenarioConfig {
        name: Some(name.to_owned()),
        grid: GridConfig {
            dim: 2,
            half_lengths: vec![0.5, 0.5],
            points: vec![64, 64],
        },
        model: ModelConfig {
            species: Some(n),
            diffusion: vec![1.0; n],
            gamma,
            kernels: KernelsConfig::Uniform(KernelSpec::Delta),
            clamp: true,
            scheme: TimeScheme::IfEuler,
            dealias: false,
        },
        ic: Some(ic),
        time: TimeConfig {
            t_end: 10.0,
            dt_max: 1e-2,
            dt_min: 1e-12,
            cfl: 0.25,
            diffusive_safety: 0.5,
            series_every: Some(series_every),
            snapshot_every: None,
        },
        limits: LimitsConfig::default(),
        output: OutputConfig::default(),
    }
}

fn bumps(n: usize) -> InitialCondition {
    let centers = [vec![0.0, 0.0], vec![0.25, 0.25]];
    InitialCondition::GaussianBump {
        masses: vec![1.0; n],
        centers: centers[..n].to_vec(),
        width: 0.1,
    }
}

fn noise(n: usize) -> InitialCondition {
    InitialCondition::UniformNoise {
        masses: vec![1.0; n],
        amplitude: 0.1,
        seed: 1,
    }
}

fn case1_blowup() -> ScenarioConfig {
    local("case1-blowup", all(1, -2.5), bumps(1), 1e-5)
}
fn case1_safe() -> ScenarioConfig {
    local("case1-safe", all(1, -0.5), noise(1), 0.1)
}
fn case2_blowup() -> ScenarioConfig {
    local("case2-blowup", split(2, -4.5, 0.25), bumps(2), 1e-5)
}
fn case2_safe() -> ScenarioConfig {
    local("case2-safe", split(2, -0.5, 0.25), noise(2), 0.1)
}
