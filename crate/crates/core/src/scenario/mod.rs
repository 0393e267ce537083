//! Scenario files, the preset registry, run orchestration and file output.

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;

pub use config::{parse_config, KernelsConfig, OutputFormat, ScenarioConfig};
pub use output::{read_series, read_snapshot, write_snapshot, RunManifest, SeriesRow, Snapshot, TerminationRecord};
pub use presets::{emit_preset, preset, preset_names, preset_summaries};
pub use runner::{run_scenario, RunOverrides, RunReport};
