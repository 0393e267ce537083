//! Runs a scenario and writes its outputs.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use super::config::{OutputFormat, ScenarioConfig};
use super::output::{snapshot_name, write_snapshot, RunManifest, SeriesWriter, Snapshot, TerminationRecord};
use crate::diagnostics::DiagnosticsRecord;
use crate::dynamics::{Model, RunEvent, RunOutcome, SimState};
use crate::error::{Error, Result};

/// Command-line style adjustments applied on top of a config.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Worker threads for the species-parallel evaluation.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub config: ScenarioConfig,
    pub outcome: RunOutcome,
    /// Diagnostics at every sample time, plus the final state if it is off
    /// the sample grid.
    pub records: Vec<DiagnosticsRecord>,
    pub manifest: RunManifest,
}

impl RunReport {
    pub fn is_blowup(&self) -> bool {
        self.outcome.termination.is_blowup()
    }
}

pub fn run_scenario(config: &ScenarioConfig, overrides: &RunOverrides) -> Result<RunReport> {
    let mut config = config.clone();
    if let Some(seed) = overrides.seed {
        config = config.with_seed(seed);
    }
    let out_dir = overrides
        .out_dir
        .clone()
        .unwrap_or_else(|| config.output.directory.clone());
    match overrides.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config("threads", e.to_string()))?;
            pool.install(|| execute(config, out_dir))
        }
        None => execute(config, out_dir),
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

struct Recorder {
    dir: PathBuf,
    series: Option<SeriesWriter>,
    snapshots: bool,
    stride: Option<u64>,
    records: Vec<DiagnosticsRecord>,
    files: Vec<String>,
    last_snapshot_step: Option<u64>,
}

impl Recorder {
    fn record(&mut self, state: &SimState, model: &Model) -> Result<()> {
        let r = DiagnosticsRecord::measure(state, model.params());
        if let Some(w) = &mut self.series {
            w.write(&r)?;
        }
        self.records.push(r);
        Ok(())
    }

    fn snapshot(&mut self, state: &SimState) -> Result<()> {
        if !self.snapshots || self.last_snapshot_step == Some(state.step_count) {
            return Ok(());
        }
        for (i, f) in state.fields.iter().enumerate() {
            let name = snapshot_name(i + 1, state.step_count);
            write_snapshot(&self.dir.join(&name), &Snapshot::from_field(f, state.t, i + 1))?;
            self.files.push(name);
        }
        self.last_snapshot_step = Some(state.step_count);
        Ok(())
    }

    fn observe(&mut self, event: RunEvent<'_>, state: &SimState, model: &Model) -> Result<()> {
        match event {
            RunEvent::Start | RunEvent::Step => {}
            RunEvent::Sample { index } => {
                self.record(state, model)?;
                if index == 0 || self.stride.is_some_and(|s| index % s == 0) {
                    self.snapshot(state)?;
                }
            }
            RunEvent::Finish(_) => {
                if self.records.last().is_none_or(|r| r.t != state.t) {
                    self.record(state, model)?;
                }
                self.snapshot(state)?;
            }
        }
        Ok(())
    }
}

fn execute(config: ScenarioConfig, out_dir: PathBuf) -> Result<RunReport> {
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let wall_start = unix_now();
    let grid = Arc::new(config.build_grid()?);
    let fields = config.initial_condition().build(&grid)?;
    let model = Model::new(grid, config.model_params(), config.solver_options())?;

    std::fs::write(out_dir.join("config.toml"), config.to_toml()).map_err(|e| Error::io(&out_dir, e))?;
    let mut files = vec!["config.toml".to_owned()];
    let series = if config.wants(OutputFormat::Series) {
        files.push("series.csv".to_owned());
        Some(SeriesWriter::create(out_dir.join("series.csv"))?)
    } else {
        None
    };
    let mut recorder = Recorder {
        dir: out_dir.clone(),
        series,
        snapshots: config.wants(OutputFormat::Snapshots),
        stride: config.snapshot_stride(),
        records: Vec::new(),
        files,
        last_snapshot_step: None,
    };

    log::info!(
        "running {} to t = {} on {:?}",
        config.name.as_deref().unwrap_or("scenario"),
        config.time.t_end,
        config.grid.points
    );
    let mut observer = |event: RunEvent<'_>, state: &SimState, model: &Model| recorder.observe(event, state, model);
    let outcome = model.run(
        SimState::new(fields),
        config.time.t_end,
        &config.controller(),
        &mut [&mut observer],
    )?;
    if let Some(w) = recorder.series.take() {
        w.finish()?;
    }
    let wall_end = unix_now();
    log::info!(
        "{:?} at t = {} after {} steps",
        outcome.termination,
        outcome.state.t,
        outcome.state.step_count
    );

    let mut files = recorder.files;
    files.push("manifest.json".to_owned());
    let manifest = RunManifest {
        config_hash: config.hash(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        t_final: outcome.state.t,
        termination: TerminationRecord::new(&outcome.termination, outcome.state.step_count, wall_start, wall_end),
        files,
    };
    manifest.write(&out_dir.join("manifest.json"))?;
    Ok(RunReport {
        out_dir,
        config,
        outcome,
        records: recorder.records,
        manifest,
    })
}
