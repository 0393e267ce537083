//! Right-hand side of the nonlocal system and its time integration.
//!
//! Each species obeys
//!
//! ```text
//! du_i/dt = D_i Lap u_i + div( H(u_i) sum_j gamma_ij grad(K_ij * u_j) )
//! ```
//!
//! where `H` is the cutoff `max(u, 0)` when clamping is enabled and the
//! identity otherwise. Diffusion is integrated exactly in Fourier space
//! (integrating factor `exp(-D_i |k|^2 dt)`); the advective flux is explicit.

use std::cell::RefCell;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, TorusGrid};
use crate::kernel::{KernelMatrix, SymbolCache};
use crate::spectral::SpectralEngine;

/// Parameters of the interacting-population model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// `D_i > 0`.
    pub diffusion: Vec<f64>,
    /// `gamma[i][j] > 0`: species `i` avoids `j`; `< 0`: attracted.
    pub gamma: Vec<Vec<f64>>,
    pub kernels: KernelMatrix,
    /// Use the positivity cutoff `h(u) = max(u, 0)` inside the flux.
    pub clamp: bool,
}

impl ModelParams {
    pub fn species(&self) -> usize {
        self.diffusion.len()
    }

    pub fn max_diffusion(&self) -> f64 {
        self.diffusion.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_diffusion(&self) -> f64 {
        self.diffusion.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self, grid: &TorusGrid) -> Result<()> {
        let n = self.species();
        if n == 0 {
            return Err(Error::InvalidModel("at least one species is required".into()));
        }
        if let Some(d) = self.diffusion.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::InvalidModel(format!("diffusion coefficients must be positive, got {d}")));
        }
        if self.gamma.len() != n || self.gamma.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidModel(format!("gamma must be {n}x{n}")));
        }
        if self.gamma.iter().flatten().any(|g| !g.is_finite()) {
            return Err(Error::InvalidModel("gamma entries must be finite".into()));
        }
        if !self.kernels.is_square(n) {
            return Err(Error::InvalidModel(format!("kernel matrix must be {n}x{n}")));
        }
        self.kernels.validate(grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TimeScheme {
    /// First-order integrating-factor Euler.
    #[default]
    #[serde(rename = "if-euler")]
    IfEuler,
    /// Second-order integrating-factor Runge-Kutta (Heun).
    #[serde(rename = "if-rk2")]
    IfRk2,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverOptions {
    pub scheme: TimeScheme,
    /// Truncate the advective term to the 2/3-rule band.
    pub dealias: bool,
}

/// Time, densities and step bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub fields: Vec<Field>,
    /// Size of the last accepted step (0 before the first).
    pub dt: f64,
    pub step_count: u64,
}

impl SimState {
    pub fn new(fields: Vec<Field>) -> Self {
        Self {
            t: 0.0,
            fields,
            dt: 0.0,
            step_count: 0,
        }
    }

    pub fn species(&self) -> usize {
        self.fields.len()
    }

    pub fn max_linf(&self) -> f64 {
        self.fields.iter().map(Field::linf).fold(0.0, f64::max)
    }
}

/// Pointwise `h(u) = max(u, 0)`.
pub fn clamp_h(u: &Field) -> Field {
    u.map(|v| v.max(0.0))
}

/// Why a run stopped early.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlowupReason {
    NonFinite { species: usize },
    Ceiling { species: usize, linf: f64 },
    DtUnderflow { dt: f64 },
}

impl std::fmt::Display for BlowupReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BlowupReason::NonFinite { species } => write!(f, "non-finite values in species {}", species + 1),
            BlowupReason::Ceiling { species, linf } => {
                write!(f, "species {} exceeded the sup-norm ceiling (|u| = {linf:e})", species + 1)
            }
            BlowupReason::DtUnderflow { dt } => write!(f, "step size underflow (dt = {dt:e})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Blowup { cause: BlowupReason },
}

impl Termination {
    pub fn is_blowup(&self) -> bool {
        matches!(self, Termination::Blowup { .. })
    }
}

/// Adaptive step-size limits and blow-up thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepController {
    /// `dt <= cfl * dx_min / |drift|_inf`.
    pub cfl: f64,
    pub dt_max: f64,
    /// Steps below this count as blow-up.
    pub dt_min: f64,
    pub linf_ceiling: f64,
    /// `dt <= diffusive_safety * 2 D_min / |drift|_inf^2`, the stability
    /// limit of explicit advection against exact diffusion.
    pub diffusive_safety: f64,
    /// Sample interval for observers; steps are shortened to land on it.
    pub sample_every: Option<f64>,
}

impl Default for StepController {
    fn default() -> Self {
        Self {
            cfl: 0.25,
            dt_max: 1e-2,
            dt_min: 1e-12,
            linf_ceiling: 1e8,
            diffusive_safety: 0.5,
            sample_every: None,
        }
    }
}

impl StepController {
    /// Largest admissible step for the given drift speed, before clipping
    /// to sample times or the end time.
    pub fn admissible_dt(&self, max_speed: f64, dx_min: f64, d_min: f64) -> f64 {
        let mut dt = self.dt_max;
        if max_speed > 0.0 {
            dt = dt
                .min(self.cfl * dx_min / max_speed)
                .min(self.diffusive_safety * 2.0 * d_min / (max_speed * max_speed));
        }
        dt
    }
}

/// What an observer is being notified about.
#[derive(Debug, Clone, Copy)]
pub enum RunEvent<'a> {
    Start,
    Step,
    /// Landed on the `index`-th multiple of `sample_every`.
    Sample { index: u64 },
    Finish(&'a Termination),
}

/// Callback invoked synchronously between steps.
pub trait Observer {
    fn observe(&mut self, event: RunEvent<'_>, state: &SimState, model: &Model) -> Result<()>;
}

impl<F> Observer for F
where
    F: FnMut(RunEvent<'_>, &SimState, &Model) -> Result<()>,
{
    fn observe(&mut self, event: RunEvent<'_>, state: &SimState, model: &Model) -> Result<()> {
        self(event, state, model)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Last accepted state (the state before the failing step on blow-up).
    pub state: SimState,
    pub termination: Termination,
}

/// Spectral and physical copies of every species.
#[derive(Clone)]
struct Evolving {
    hats: Vec<Vec<Complex64>>,
    phys: Vec<Vec<f64>>,
}

impl Evolving {
    fn zeros(species: usize, len: usize) -> Self {
        Self {
            hats: vec![vec![Complex64::default(); len]; species],
            phys: vec![vec![0.0; len]; species],
        }
    }
}

/// Buffers for one drift evaluation.
#[derive(Default)]
struct AdvectScratch {
    potential: Vec<Complex64>,
    gy: Vec<Complex64>,
    vx: Vec<f64>,
    vy: Vec<f64>,
}

impl AdvectScratch {
    fn sized(&mut self, len: usize) -> &mut Self {
        self.potential.resize(len, Complex64::default());
        self.gy.resize(len, Complex64::default());
        self.vx.resize(len, 0.0);
        self.vy.resize(len, 0.0);
        self
    }
}

thread_local! {
    static ADVECT: RefCell<Vec<Complex64>> = const { RefCell::new(Vec::new()) };
}

/// Buffers reused from step to step.
struct StepWork {
    factors: Vec<Vec<f64>>,
    predictor: Evolving,
    adv_pred: Vec<Vec<Complex64>>,
}

impl StepWork {
    fn new(species: usize, len: usize) -> Self {
        Self {
            factors: vec![vec![0.0; len]; species],
            predictor: Evolving::zeros(species, len),
            adv_pred: vec![vec![Complex64::default(); len]; species],
        }
    }
}

/// A model bound to a grid: kernel symbols, transforms and the stepper.
#[derive(Debug)]
pub struct Model {
    params: ModelParams,
    options: SolverOptions,
    engine: Arc<SpectralEngine>,
    /// `gamma_ij K^_ij`, or `None` when `gamma_ij == 0`.
    weighted: Vec<Vec<Option<Vec<Complex64>>>>,
    /// `gamma_ij K^_ij (i k_x - k_y)`: maps `u^_j` to the spectrum of `v_x + i v_y`.
    gradient_weighted: Vec<Vec<Option<Vec<Complex64>>>>,
    /// `k_y` derivative wavenumbers (zero in 1D).
    ky: Vec<f64>,
    cache: Arc<SymbolCache>,
}

impl Model {
    pub fn new(grid: Arc<TorusGrid>, params: ModelParams, options: SolverOptions) -> Result<Self> {
        let engine = Arc::new(SpectralEngine::new(grid));
        Self::with_cache(Arc::new(SymbolCache::new(engine)), params, options)
    }

    /// Builds a model reusing previously computed kernel symbols.
    pub fn with_cache(cache: Arc<SymbolCache>, params: ModelParams, options: SolverOptions) -> Result<Self> {
        let engine = cache.engine().clone();
        params.validate(engine.grid())?;
        let n = params.species();
        let mut weighted: Vec<Vec<Option<Vec<Complex64>>>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let g = params.gamma[i][j];
                if g == 0.0 {
                    row.push(None);
                } else {
                    let symbol = cache.get(params.kernels.get(i, j))?;
                    row.push(Some(symbol.iter().map(|c| c * g).collect()));
                }
            }
            weighted.push(row);
        }
        let kx = engine.derivative_wavenumbers(0);
        let ky = match engine.grid().dim() {
            1 => vec![0.0; kx.len()],
            _ => engine.derivative_wavenumbers(1).to_vec(),
        };
        let gradient_weighted = weighted
            .iter()
            .map(|row| {
                row.iter()
                    .map(|w| {
                        w.as_ref().map(|w| {
                            w.iter()
                                .zip(kx)
                                .zip(&ky)
                                .map(|((w, &x), &y)| w * Complex64::new(-y, x))
                                .collect()
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            params,
            options,
            engine,
            weighted,
            gradient_weighted,
            ky,
            cache,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn options(&self) -> SolverOptions {
        self.options
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        self.engine.grid()
    }

    pub fn engine(&self) -> &Arc<SpectralEngine> {
        &self.engine
    }

    pub fn symbols(&self) -> &Arc<SymbolCache> {
        &self.cache
    }

    pub fn species(&self) -> usize {
        self.params.species()
    }

    fn check_fields(&self, fields: &[Field]) -> Result<()> {
        if fields.len() != self.species() {
            return Err(Error::InvalidModel(format!(
                "expected {} species, got {}",
                self.species(),
                fields.len()
            )));
        }
        if fields.iter().any(|f| f.grid().as_ref() != self.grid().as_ref()) {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn to_evolving(&self, fields: &[Field]) -> Evolving {
        let mut ev = Evolving::zeros(fields.len(), self.grid().len());
        for (p, f) in ev.phys.iter_mut().zip(fields) {
            p.copy_from_slice(f.values());
        }
        self.sync_spectral(&mut ev);
        ev
    }

    /// Recomputes `hats` from `phys`, two species per FFT.
    fn sync_spectral(&self, ev: &mut Evolving) {
        let Evolving { hats, phys } = ev;
        for (h, p) in hats.chunks_mut(2).zip(phys.chunks(2)) {
            match (h, p) {
                ([ha, hb], [pa, pb]) => self.engine.forward_pair_into(pa, pb, ha, hb),
                ([ha], [pa]) => self.engine.forward_real_into(pa, ha),
                _ => unreachable!(),
            }
        }
    }

    /// Recomputes `phys` from `hats`, two species per FFT.
    fn sync_physical(&self, ev: &mut Evolving) {
        let Evolving { hats, phys } = ev;
        for (h, p) in hats.chunks(2).zip(phys.chunks_mut(2)) {
            match (h, p) {
                ([ha, hb], [pa, pb]) => self.engine.inverse_pair_into(ha, hb, pa, pb),
                ([ha], [pa]) => self.engine.inverse_real_into(ha, pa),
                _ => unreachable!(),
            }
        }
    }

    /// Writes `grad(sum_j gamma_ij K_ij * u_j)` for species `i` into
    /// `s.vx` (and `s.vy` in 2D). Returns false when the drift vanishes
    /// identically.
    fn drift_into(&self, i: usize, hats: &[Vec<Complex64>], s: &mut AdvectScratch) -> bool {
        let mut any = false;
        s.potential.fill(Complex64::default());
        for (w, hat) in self.weighted[i].iter().zip(hats) {
            if let Some(w) = w {
                any = true;
                for ((p, a), b) in s.potential.iter_mut().zip(w).zip(hat) {
                    *p += a * b;
                }
            }
        }
        if !any {
            s.vx.fill(0.0);
            s.vy.fill(0.0);
            return false;
        }
        if self.grid().dim() == 1 {
            self.engine.apply_derivative(0, &mut s.potential);
            self.engine.inverse_real_into(&s.potential, &mut s.vx);
        } else {
            s.gy.copy_from_slice(&s.potential);
            self.engine.apply_derivative(0, &mut s.potential);
            self.engine.apply_derivative(1, &mut s.gy);
            self.engine.inverse_pair_into(&s.potential, &s.gy, &mut s.vx, &mut s.vy);
        }
        true
    }

    /// Advective term `div(H(u_i) v_i)` in mode space; returns `|v_i|_inf`.
    ///
    /// Both drift components travel through one complex transform as
    /// `v_x + i v_y`, and likewise the two flux components on the way back.
    fn advective_term_into(&self, i: usize, state: &Evolving, out: &mut [Complex64]) -> f64 {
        let mut terms = self.gradient_weighted[i]
            .iter()
            .zip(&state.hats)
            .filter_map(|(w, h)| w.as_ref().map(|w| (w, h)));
        let Some((w0, h0)) = terms.next() else {
            out.fill(Complex64::default());
            return 0.0;
        };
        ADVECT.with(|cell| {
            let mut z = cell.borrow_mut();
            z.resize(out.len(), Complex64::default());
            for ((z, w), h) in z.iter_mut().zip(w0).zip(h0) {
                *z = w * h;
            }
            for (w, h) in terms {
                for ((z, w), h) in z.iter_mut().zip(w).zip(h) {
                    *z += w * h;
                }
            }
            self.engine.inverse_in_place(&mut z);

            let clamp = self.params.clamp;
            let mut speed2: f64 = 0.0;
            for (z, &u) in z.iter_mut().zip(&state.phys[i]) {
                speed2 = speed2.max(z.norm_sqr());
                *z *= if clamp { u.max(0.0) } else { u };
            }
            self.engine.forward_unscaled_in_place(&mut z);

            // F[flux_x] = (Z + conj Z(-k)) / 2, F[flux_y] = (Z - conj Z(-k)) / 2i
            let scale = 0.5 / out.len() as f64;
            let kx = self.engine.derivative_wavenumbers(0);
            for (k, o) in out.iter_mut().enumerate() {
                let zm = z[self.engine.mirror()[k]].conj();
                let a = z[k] + zm;
                let b = z[k] - zm;
                *o = (Complex64::new(-kx[k] * a.im, kx[k] * a.re) + b * self.ky[k]) * scale;
            }
            if self.options.dealias {
                self.engine.dealias(out);
            }
            speed2.sqrt()
        })
    }

    /// Advective terms of every species (in parallel); returns the largest
    /// drift speed.
    fn advective_terms_into(&self, state: &Evolving, adv: &mut [Vec<Complex64>]) -> f64 {
        adv.par_iter_mut()
            .enumerate()
            .map(|(i, out)| self.advective_term_into(i, state, out))
            .reduce(|| 0.0, f64::max)
    }

    /// `sum_j gamma_ij grad(K_ij * u_j)` as one field per axis.
    pub fn drift_velocity(&self, i: usize, fields: &[Field]) -> Result<Vec<Field>> {
        self.check_fields(fields)?;
        if i >= self.species() {
            return Err(Error::InvalidModel(format!("no species with index {i}")));
        }
        let ev = self.to_evolving(fields);
        let mut s = AdvectScratch::default();
        s.sized(self.grid().len());
        self.drift_into(i, &ev.hats, &mut s);
        let mut out = vec![Field::from_values(self.grid().clone(), s.vx)];
        if self.grid().dim() == 2 {
            out.push(Field::from_values(self.grid().clone(), s.vy));
        }
        Ok(out)
    }

    /// Time derivative of every species.
    pub fn rhs(&self, fields: &[Field]) -> Result<Vec<Field>> {
        self.check_fields(fields)?;
        if let Some(i) = fields.iter().position(|f| !f.is_finite()) {
            return Err(Error::InvalidModel(format!("species {} holds non-finite values", i + 1)));
        }
        let mut ev = self.to_evolving(fields);
        let mut adv = ev.hats.clone();
        self.advective_terms_into(&ev, &mut adv);
        let k2 = self.engine.k_squared();
        for ((a, hat), &d) in adv.iter().zip(ev.hats.iter_mut()).zip(&self.params.diffusion) {
            for ((h, x), &k) in hat.iter_mut().zip(a).zip(k2) {
                *h = x - *h * (d * k);
            }
        }
        self.sync_physical(&mut ev);
        Ok(ev
            .phys
            .into_iter()
            .map(|v| Field::from_values(self.grid().clone(), v))
            .collect())
    }

    /// Advances `cur` by `dt` given its advective terms, writing into `next`.
    fn advance(&self, cur: &Evolving, adv: &[Vec<Complex64>], dt: f64, work: &mut StepWork, next: &mut Evolving) {
        for (e, &d) in work.factors.iter_mut().zip(&self.params.diffusion) {
            self.engine.heat_factors_into(d, dt, e);
        }
        let euler_into = |target: &mut Evolving, factors: &[Vec<f64>]| {
            for (((t, hat), a), e) in target.hats.iter_mut().zip(&cur.hats).zip(adv).zip(factors) {
                for (((x, h), n), &f) in t.iter_mut().zip(hat).zip(a).zip(e) {
                    *x = (h + n * dt) * f;
                }
            }
        };
        match self.options.scheme {
            TimeScheme::IfEuler => euler_into(next, &work.factors),
            TimeScheme::IfRk2 => {
                euler_into(&mut work.predictor, &work.factors);
                self.sync_physical(&mut work.predictor);
                self.advective_terms_into(&work.predictor, &mut work.adv_pred);
                for ((((t, hat), a0), a1), e) in next
                    .hats
                    .iter_mut()
                    .zip(&cur.hats)
                    .zip(adv)
                    .zip(&work.adv_pred)
                    .zip(&work.factors)
                {
                    for ((((x, h), n0), n1), &f) in t.iter_mut().zip(hat).zip(a0).zip(a1).zip(e) {
                        *x = h * f + (n0 * f + n1) * (0.5 * dt);
                    }
                }
            }
        }
        self.sync_physical(next);
    }

    /// One integrating-factor step of size `dt`.
    ///
    /// Blow-up (non-finite values or a sup norm above `ceiling`) is
    /// reported as `Err`.
    pub fn step_imex(&self, state: &SimState, dt: f64, ceiling: f64) -> Result<Result<SimState, BlowupReason>> {
        self.check_fields(&state.fields)?;
        if !(dt > 0.0) {
            return Err(Error::InvalidModel(format!("step size must be positive, got {dt}")));
        }
        let cur = self.to_evolving(&state.fields);
        let mut adv = cur.hats.clone();
        self.advective_terms_into(&cur, &mut adv);
        let mut work = StepWork::new(self.species(), self.grid().len());
        let mut next = cur.clone();
        self.advance(&cur, &adv, dt, &mut work, &mut next);
        if let Some(reason) = inspect(next.phys.iter().map(Vec::as_slice), ceiling) {
            return Ok(Err(reason));
        }
        Ok(Ok(SimState {
            t: state.t + dt,
            fields: next
                .phys
                .into_iter()
                .map(|v| Field::from_values(self.grid().clone(), v))
                .collect(),
            dt,
            step_count: state.step_count + 1,
        }))
    }

    /// Integrates from `initial` to `t_end` with adaptive steps.
    pub fn run(
        &self,
        initial: SimState,
        t_end: f64,
        controller: &StepController,
        observers: &mut [&mut dyn Observer],
    ) -> Result<RunOutcome> {
        self.check_fields(&initial.fields)?;
        if !(t_end > initial.t) {
            return Err(Error::InvalidModel(format!(
                "end time {t_end} must exceed the start time {}",
                initial.t
            )));
        }
        if let Some(reason) = inspect(initial.fields.iter().map(Field::values), controller.linf_ceiling) {
            let termination = Termination::Blowup { cause: reason };
            for o in observers.iter_mut() {
                o.observe(RunEvent::Finish(&termination), &initial, self)?;
            }
            return Ok(RunOutcome { state: initial, termination });
        }

        let dx = self.grid().min_spacing();
        let d_min = self.params.min_diffusion();
        let mut cur = self.to_evolving(&initial.fields);
        let mut next = cur.clone();
        let mut adv = cur.hats.clone();
        let mut work = StepWork::new(self.species(), self.grid().len());
        let mut state = initial;
        let mut sample_index = controller
            .sample_every
            .map(|s| (state.t / s).round() as u64)
            .unwrap_or(0);

        for o in observers.iter_mut() {
            o.observe(RunEvent::Start, &state, self)?;
            if controller.sample_every.is_some() {
                o.observe(RunEvent::Sample { index: sample_index }, &state, self)?;
            }
        }

        let termination = loop {
            let remaining = t_end - state.t;
            if remaining <= 1e-12 * t_end.abs().max(1.0) {
                break Termination::Completed;
            }
            let speed = self.advective_terms_into(&cur, &mut adv);
            let mut dt = controller.admissible_dt(speed, dx, d_min);
            if dt < controller.dt_min {
                break Termination::Blowup {
                    cause: BlowupReason::DtUnderflow { dt },
                };
            }
            let mut t_next = state.t + dt;
            let mut landed = None;
            if let Some(every) = controller.sample_every {
                let target = (sample_index + 1) as f64 * every;
                if t_next >= target - 1e-12 * every {
                    t_next = target;
                    landed = Some(sample_index + 1);
                }
            }
            if t_next >= t_end {
                t_next = t_end;
            }
            dt = t_next - state.t;

            self.advance(&cur, &adv, dt, &mut work, &mut next);
            if let Some(reason) = inspect(next.phys.iter().map(Vec::as_slice), controller.linf_ceiling) {
                break Termination::Blowup { cause: reason };
            }
            std::mem::swap(&mut cur, &mut next);
            for (f, v) in state.fields.iter_mut().zip(&cur.phys) {
                f.values_mut().copy_from_slice(v);
            }
            state.t = t_next;
            state.dt = dt;
            state.step_count += 1;
            for o in observers.iter_mut() {
                o.observe(RunEvent::Step, &state, self)?;
            }
            if let Some(index) = landed {
                // the step may have been cut short by t_end first
                let target = index as f64 * controller.sample_every.unwrap_or(0.0);
                if (state.t - target).abs() <= 1e-12 * state.t.max(1.0) {
                    sample_index = index;
                    for o in observers.iter_mut() {
                        o.observe(RunEvent::Sample { index }, &state, self)?;
                    }
                }
            }
        };

        for o in observers.iter_mut() {
            o.observe(RunEvent::Finish(&termination), &state, self)?;
        }
        Ok(RunOutcome { state, termination })
    }
}

fn inspect<'a>(phys: impl IntoIterator<Item = &'a [f64]>, ceiling: f64) -> Option<BlowupReason> {
    for (species, values) in phys.into_iter().enumerate() {
        let mut linf: f64 = 0.0;
        for &v in values {
            if !v.is_finite() {
                return Some(BlowupReason::NonFinite { species });
            }
            linf = linf.max(v.abs());
        }
        if linf > ceiling {
            return Some(BlowupReason::Ceiling { species, linf });
        }
    }
    None
}
