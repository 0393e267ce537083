//! Runtime measurements and the second-moment blow-up calculus for the
//! local (delta-kernel) limit.
//!
//! For the local system the second moment `M(t) = sum_i int |x|^2 u_i dx`
//! of data that vanishes near the identification seam satisfies
//!
//! ```text
//! Case 1 (all gamma_ij < 0):                 dM/dt <= 2 D n P + gamma n (2P - |T|)
//! Case 2 (gamma_ii < 0, gamma_ij >= 0, i!=j): dM/dt <= 2 D n P + gamma n (P - N |T| / 2)
//! ```
//!
//! with `D = max D_i`, `P` the total mass and `gamma` the largest entry
//! (Case 1) or largest diagonal entry (Case 2). When the bound is negative
//! `M` must reach zero in finite time, which forces blow-up.

use std::f64::consts::PI;

use serde::Serialize;

use crate::dynamics::{BlowupReason, ModelParams, SimState};
use crate::error::{Error, Result};
use crate::grid::{Field, TorusGrid};

/// Per-species mass and total `P`.
pub fn total_mass(fields: &[Field]) -> (Vec<f64>, f64) {
    let masses: Vec<f64> = fields.iter().map(Field::integrate).collect();
    let total = masses.iter().sum();
    (masses, total)
}

/// Circular mean position of a density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterOfMass {
    pub position: [f64; 2],
    /// Set when some axis has no preferred direction (e.g. uniform data);
    /// that axis is reported as 0.
    pub degenerate: bool,
}

/// Per axis, the angle of `sum u e^{i pi x / L}` mapped back to `[-L, L)`.
pub fn periodic_center_of_mass(u: &Field) -> Result<CenterOfMass> {
    weighted_center(u.grid(), u.values())
}

fn weighted_center(grid: &TorusGrid, values: &[f64]) -> Result<CenterOfMass> {
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroMass);
    }
    let dim = grid.dim();
    let mut sums = [[0.0f64; 2]; 2];
    for (flat, &v) in values.iter().enumerate() {
        let idx = grid.unravel(flat);
        for (axis, s) in sums.iter_mut().enumerate().take(dim) {
            let theta = PI * grid.coordinate(axis, idx[axis]) / grid.half_lengths()[axis];
            s[0] += v * theta.sin();
            s[1] += v * theta.cos();
        }
    }
    let mut position = [0.0; 2];
    let mut degenerate = false;
    let scale: f64 = values.iter().map(|v| v.abs()).sum();
    for axis in 0..dim {
        let [s, c] = sums[axis];
        if s.hypot(c) <= 1e-12 * scale {
            degenerate = true;
            continue;
        }
        let l = grid.half_lengths()[axis];
        position[axis] = grid.wrap(axis, l * s.atan2(c) / PI);
    }
    Ok(CenterOfMass { position, degenerate })
}

/// Circular mean of the summed density of all species.
pub fn joint_center_of_mass(fields: &[Field]) -> Result<CenterOfMass> {
    let first = fields.first().ok_or(Error::ZeroMass)?;
    let mut total = vec![0.0; first.values().len()];
    for f in fields {
        for (t, v) in total.iter_mut().zip(f.values()) {
            *t += v;
        }
    }
    weighted_center(first.grid(), &total)
}

/// `M = sum_i sum_cells |wrap(x - center)|^2 u_i dV`.
pub fn second_moment(fields: &[Field], center: [f64; 2]) -> f64 {
    let Some(first) = fields.first() else {
        return 0.0;
    };
    let grid = first.grid();
    let dim = grid.dim();
    let weights: Vec<f64> = (0..grid.len())
        .map(|flat| {
            let idx = grid.unravel(flat);
            (0..dim)
                .map(|axis| {
                    let d = grid.wrap(axis, grid.coordinate(axis, idx[axis]) - center[axis]);
                    d * d
                })
                .sum()
        })
        .collect();
    fields
        .iter()
        .map(|f| f.values().iter().zip(&weights).map(|(u, w)| u * w).sum::<f64>())
        .sum::<f64>()
        * grid.cell_volume()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlowupCase {
    /// Mutual and self attraction: all `gamma_ij < 0`.
    Case1,
    /// Self attraction with mutual avoidance.
    Case2,
}

/// `gamma* = -2 P D / (2P - |T|)`; requires `P > |T| / 2`.
pub fn case1_threshold(mass: f64, d_max: f64, volume: f64) -> Result<f64> {
    if !(mass > volume / 2.0) {
        return Err(Error::MassPrecondition {
            mass,
            required: volume / 2.0,
        });
    }
    Ok(-2.0 * mass * d_max / (2.0 * mass - volume))
}

/// `gamma* = -4 P D / (2P - N |T|)`; requires `P > N |T| / 2`.
pub fn case2_threshold(mass: f64, d_max: f64, volume: f64, species: usize) -> Result<f64> {
    let n = species as f64;
    if !(mass > n * volume / 2.0) {
        return Err(Error::MassPrecondition {
            mass,
            required: n * volume / 2.0,
        });
    }
    Ok(-4.0 * mass * d_max / (2.0 * mass - n * volume))
}

/// Structural check for Case 2.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Case2Condition {
    /// `sum_{j != i} (gamma_ij + gamma_ji) < -gamma_ii` for each `i`.
    pub per_species: Vec<bool>,
    pub holds: bool,
    pub self_attraction: bool,
    pub mutual_avoidance: bool,
}

pub fn case2_condition(gamma: &[Vec<f64>]) -> Case2Condition {
    let n = gamma.len();
    let per_species: Vec<bool> = (0..n)
        .map(|i| {
            let cross: f64 = (0..n).filter(|&j| j != i).map(|j| gamma[i][j] + gamma[j][i]).sum();
            cross < -gamma[i][i]
        })
        .collect();
    let self_attraction = (0..n).all(|i| gamma[i][i] < 0.0);
    let mutual_avoidance = (0..n).all(|i| (0..n).all(|j| i == j || gamma[i][j] >= 0.0));
    Case2Condition {
        holds: per_species.iter().all(|&b| b),
        per_species,
        self_attraction,
        mutual_avoidance,
    }
}

/// Right-hand side of the `dM/dt` bound for the given case.
pub fn moment_bound(case: BlowupCase, mass: f64, d_max: f64, gamma: f64, volume: f64, species: usize, dim: usize) -> f64 {
    let n = dim as f64;
    match case {
        BlowupCase::Case1 => 2.0 * d_max * n * mass + gamma * n * (2.0 * mass - volume),
        BlowupCase::Case2 => 2.0 * d_max * n * mass + gamma * n * (mass - species as f64 * volume / 2.0),
    }
}

/// Which case (if any) a gamma matrix belongs to, with its effective gamma.
pub fn classify(gamma: &[Vec<f64>]) -> Option<(BlowupCase, f64)> {
    let n = gamma.len();
    if n == 0 {
        return None;
    }
    if gamma.iter().flatten().all(|&g| g < 0.0) {
        let g = gamma.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        return Some((BlowupCase::Case1, g));
    }
    let cond = case2_condition(gamma);
    if cond.self_attraction && cond.mutual_avoidance {
        let g = (0..n).map(|i| gamma[i][i]).fold(f64::NEG_INFINITY, f64::max);
        return Some((BlowupCase::Case2, g));
    }
    None
}

/// Threshold assessment for a parameter set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupVerdict {
    pub case_id: BlowupCase,
    pub mass: f64,
    /// `None` when the mass precondition fails.
    pub gamma_star: Option<f64>,
    pub gamma: f64,
    pub supercritical: bool,
    /// Case-2 structural condition (always true for Case 1).
    pub condition_holds: bool,
}

impl BlowupVerdict {
    pub fn assess(params: &ModelParams, mass: f64, volume: f64) -> Option<Self> {
        let (case_id, gamma) = classify(&params.gamma)?;
        let d = params.max_diffusion();
        let (gamma_star, condition_holds) = match case_id {
            BlowupCase::Case1 => (case1_threshold(mass, d, volume).ok(), true),
            BlowupCase::Case2 => (
                case2_threshold(mass, d, volume, params.species()).ok(),
                case2_condition(&params.gamma).holds,
            ),
        };
        Some(Self {
            case_id,
            mass,
            gamma_star,
            gamma,
            supercritical: condition_holds && gamma_star.is_some_and(|g| gamma < g),
            condition_holds,
        })
    }
}

/// One snapshot of the diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub l2: Vec<f64>,
    pub linf: Vec<f64>,
    pub neg_l2: Vec<f64>,
    /// Second moment about the joint circular mean.
    pub second_moment: f64,
    pub center: [f64; 2],
    /// Per-species circular means (`None` for massless species).
    pub com: Vec<Option<[f64; 2]>>,
    /// Case bound on `dM/dt`, NaN when no case applies.
    pub dmdt_bound: f64,
}

impl DiagnosticsRecord {
    pub fn measure(state: &SimState, params: &ModelParams) -> Self {
        let fields = &state.fields;
        let grid = fields[0].grid();
        let (mass, total) = total_mass(fields);
        let center = joint_center_of_mass(fields).map(|c| c.position).unwrap_or([0.0; 2]);
        let dmdt_bound = match classify(&params.gamma) {
            Some((case, gamma)) => moment_bound(
                case,
                total,
                params.max_diffusion(),
                gamma,
                grid.volume(),
                params.species(),
                grid.dim(),
            ),
            None => f64::NAN,
        };
        Self {
            t: state.t,
            min: fields.iter().map(Field::min).collect(),
            max: fields.iter().map(Field::max).collect(),
            l2: fields.iter().map(Field::l2).collect(),
            linf: fields.iter().map(Field::linf).collect(),
            neg_l2: fields.iter().map(Field::negative_part_l2).collect(),
            com: fields
                .iter()
                .map(|f| periodic_center_of_mass(f).ok().map(|c| c.position))
                .collect(),
            second_moment: second_moment(fields, center),
            center,
            mass,
            dmdt_bound,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }
}

/// `max_i |u_i|_inf / mean_i`, a dimensionless peak-sharpness measure.
pub fn steepening(fields: &[Field]) -> f64 {
    fields
        .iter()
        .filter_map(|f| {
            let mean = f.integrate() / f.grid().volume();
            (mean > 0.0).then(|| f.linf() / mean)
        })
        .fold(0.0, f64::max)
}

/// Discrete blow-up proxies: sup-norm ceiling, non-finite values, and step
/// size underflow, each reported separately.
#[derive(Debug, Clone)]
pub struct BlowupDetector {
    pub linf_ceiling: f64,
    pub dt_min: f64,
    /// `(t, steepening)` history.
    pub history: Vec<(f64, f64)>,
    pub flagged: Option<BlowupReason>,
}

impl BlowupDetector {
    pub fn new(linf_ceiling: f64, dt_min: f64) -> Self {
        Self {
            linf_ceiling,
            dt_min,
            history: Vec::new(),
            flagged: None,
        }
    }

    /// Inspects a state; `dt` is the step that produced it (0 for the
    /// initial state).
    pub fn inspect(&mut self, state: &SimState) -> Option<BlowupReason> {
        for (species, f) in state.fields.iter().enumerate() {
            if !f.is_finite() {
                return self.flag(BlowupReason::NonFinite { species });
            }
            let linf = f.linf();
            if linf > self.linf_ceiling {
                return self.flag(BlowupReason::Ceiling { species, linf });
            }
        }
        if state.step_count > 0 && state.dt < self.dt_min {
            return self.flag(BlowupReason::DtUnderflow { dt: state.dt });
        }
        self.history.push((state.t, steepening(&state.fields)));
        None
    }

    fn flag(&mut self, reason: BlowupReason) -> Option<BlowupReason> {
        self.flagged.get_or_insert(reason.clone());
        Some(reason)
    }

    pub fn last_steepening(&self) -> Option<f64> {
        self.history.last().map(|h| h.1)
    }
}

/// Centered finite-difference slopes of a sampled series (interior points).
pub fn centered_slopes(samples: &[(f64, f64)]) -> Vec<(f64, f64)> {
    samples
        .windows(3)
        .map(|w| (w[1].0, (w[2].1 - w[0].1) / (w[2].0 - w[0].0)))
        .collect()
}
