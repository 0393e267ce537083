//! Fixtures shared by the popflow benchmarks.

use std::sync::Arc;

use popflow::{preset, Field, Model, SimState, TorusGrid};

/// Grid sizes swept by the benchmarks.
pub const SIZES: [usize; 3] = [64, 128, 256];

pub fn unit_grid(n: usize) -> Arc<TorusGrid> {
    Arc::new(TorusGrid::square(0.5, n).expect("valid grid"))
}

/// Deterministic smooth-plus-rough test field.
pub fn test_field(grid: &Arc<TorusGrid>) -> Field {
    grid.sample(|p| 1.0 + 0.5 * (6.0 * p[0]).sin() * (4.0 * p[1]).cos() + 0.1 * (53.0 * p[0] * p[1]).sin())
}

/// A figure preset's model and initial state on an `n x n` grid.
pub fn preset_state(name: &str, n: usize) -> (Model, SimState) {
    let mut config = preset(name).expect("known preset");
    config.grid.points = vec![n, n];
    let grid = Arc::new(config.build_grid().expect("valid grid"));
    let fields = config.initial_condition().build(&grid).expect("valid initial condition");
    let model = Model::new(grid, config.model_params(), config.solver_options()).expect("valid model");
    (model, SimState::new(fields))
}
