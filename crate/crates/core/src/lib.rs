//! Pseudo-spectral simulation of nonlocal advection-diffusion systems for
//! interacting populations on the periodic torus `[-L, L)^n`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod ic;
pub mod kernel;
pub mod oracle;
pub mod scenario;
pub mod spectral;

pub use diagnostics::{BlowupCase, BlowupDetector, BlowupVerdict, DiagnosticsRecord};
pub use dynamics::{
    BlowupReason, Model, ModelParams, Observer, RunEvent, RunOutcome, SimState, SolverOptions, StepController,
    Termination, TimeScheme,
};
pub use error::{Error, Result};
pub use grid::{Field, TorusGrid};
pub use ic::InitialCondition;
pub use kernel::{KernelMatrix, KernelSpec, SymbolCache};
pub use spectral::{SpectralEngine, SpectralField};
pub use scenario::{parse_config, preset, run_scenario, RunOverrides, ScenarioConfig};
