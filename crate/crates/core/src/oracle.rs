//! Brute-force reference computations and the self-test suite built on them.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{Field, TorusGrid};
use crate::kernel::{kernel_symbol, sample_on_grid, sample_raw, KernelSample, KernelSpec};
use crate::spectral::SpectralEngine;

/// Direct periodic quadrature `sum_y K(x - y) u(y) dy` using the same
/// renormalized kernel samples as the spectral path. `O(len^2)`.
pub fn direct_convolution(spec: &KernelSpec, u: &Field) -> Result<Field> {
    let grid = u.grid();
    let kernel = match sample_on_grid(spec, grid)? {
        KernelSample::Delta => return Ok(u.clone()),
        KernelSample::Sampled(k) => k,
    };
    let pts = grid.points();
    let (nx, ny) = (pts[0], pts.get(1).copied().unwrap_or(1));
    let cell = grid.cell_volume();
    let (k, v) = (kernel.values(), u.values());
    let out = (0..nx * ny)
        .map(|a| {
            let (ax, ay) = (a / ny, a % ny);
            let mut acc = 0.0;
            for bx in 0..nx {
                for by in 0..ny {
                    let d = ((ax + nx - bx) % nx) * ny + (ay + ny - by) % ny;
                    acc += k[d] * v[bx * ny + by];
                }
            }
            acc * cell
        })
        .collect();
    Ok(Field::from_values(grid.clone(), out))
}

/// Kernels exercised by the convolution oracle on a grid of half-length
/// 0.5.
pub fn oracle_kernels() -> Vec<KernelSpec> {
    vec![
        KernelSpec::CosineBump { radius: 0.3 },
        KernelSpec::TopHat { radius: 0.3 },
        KernelSpec::GaussianPeriodic { width: 0.1 },
        KernelSpec::Delta,
    ]
}

pub fn random_field(grid: &Arc<TorusGrid>, rng: &mut impl Rng) -> Field {
    let values = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    Field::from_values(grid.clone(), values)
}

/// Largest `|spectral - direct|` over `trials` random fields per kernel on
/// the unit 8x8 torus.
pub fn convolution_error(trials: usize, seed: u64) -> Result<f64> {
    let grid = Arc::new(TorusGrid::square(0.5, 8)?);
    let engine = SpectralEngine::new(grid.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for spec in oracle_kernels() {
        let symbol = kernel_symbol(&spec, &engine)?;
        for _ in 0..trials {
            let u = random_field(&grid, &mut rng);
            let fast = engine.convolve(&symbol, &u)?;
            let slow = direct_convolution(&spec, &u)?;
            for (a, b) in fast.values().iter().zip(slow.values()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(worst)
}

/// Cosine-bump masses on an `n x n` unit torus: `(raw, renormalized)`.
pub fn cosine_masses(radius: f64, n: usize) -> Result<(f64, f64)> {
    let grid = Arc::new(TorusGrid::square(0.5, n)?);
    let spec = KernelSpec::CosineBump { radius };
    let mass = |s: KernelSample| match s {
        KernelSample::Sampled(f) => f.integrate(),
        KernelSample::Delta => 1.0,
    };
    Ok((mass(sample_raw(&spec, &grid)?), mass(sample_on_grid(&spec, &grid)?)))
}

/// Max error of one heat step on the mode `cos(2 pi (m x + l y))`
/// against `exp(-D |k|^2 tau)`.
pub fn heat_mode_error(n: usize, mode: [i32; 2], diffusion: f64, tau: f64) -> Result<f64> {
    let grid = Arc::new(TorusGrid::square(0.5, n)?);
    let engine = SpectralEngine::new(grid.clone());
    let k = [2.0 * PI * mode[0] as f64, 2.0 * PI * mode[1] as f64];
    let u = grid.sample(|p| (k[0] * p[0] + k[1] * p[1]).cos());
    let decay = (-diffusion * (k[0] * k[0] + k[1] * k[1]) * tau).exp();
    let out = engine.heat_propagate(&u, diffusion, tau)?;
    Ok(out
        .values()
        .iter()
        .zip(u.values())
        .map(|(a, b)| (a - decay * b).abs())
        .fold(0.0, f64::max))
}

/// `|e^{(t1+t2)D Lap} u - e^{t2 D Lap} e^{t1 D Lap} u|_inf` on a random
/// field.
pub fn semigroup_defect(n: usize, diffusion: f64, t1: f64, t2: f64, seed: u64) -> Result<f64> {
    let grid = Arc::new(TorusGrid::square(0.5, n)?);
    let engine = SpectralEngine::new(grid.clone());
    let u = random_field(&grid, &mut ChaCha8Rng::seed_from_u64(seed));
    let once = engine.heat_propagate(&u, diffusion, t1 + t2)?;
    let twice = engine.heat_propagate(&engine.heat_propagate(&u, diffusion, t1)?, diffusion, t2)?;
    Ok(once
        .values()
        .iter()
        .zip(twice.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Violations of the four clamp inequalities on one pair of fields.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClampViolations {
    pub l2: bool,
    pub gradient: bool,
    pub transport: bool,
    pub lipschitz: bool,
}

impl ClampViolations {
    pub fn any(&self) -> bool {
        self.l2 || self.gradient || self.transport || self.lipschitz
    }
}

/// Checks, in discrete norms:
/// `|h(v)|_2 <= |v|_2`, `|grad h(v)|_2 <= |grad v|_2` (masked gradient),
/// `|h(v) grad v|_1 <= |v grad v|_1`, `|h(v1) - h(v2)|_2 <= |v1 - v2|_2`.
pub fn clamp_inequalities(engine: &SpectralEngine, v1: &Field, v2: &Field) -> Result<ClampViolations> {
    let h = |v: f64| v.max(0.0);
    let cell = v1.grid().cell_volume();
    let slack = |rhs: f64| 1e-12 * rhs.max(1e-300);
    let norm2 = |it: &mut dyn Iterator<Item = f64>| (it.map(|x| x * x).sum::<f64>() * cell).sqrt();

    let v = v1.values();
    let grad = engine.gradient(v1)?;
    let mut grad_sq = 0.0;
    let mut masked_sq = 0.0;
    let mut transport_h = 0.0;
    let mut transport_v = 0.0;
    for (idx, &x) in v.iter().enumerate() {
        let g2: f64 = grad.iter().map(|g| g.values()[idx].powi(2)).sum();
        let g = g2.sqrt();
        grad_sq += g2;
        if x > 0.0 {
            masked_sq += g2;
        }
        transport_h += h(x) * g;
        transport_v += x.abs() * g;
    }
    let hv = norm2(&mut v.iter().map(|&x| h(x)));
    let vv = norm2(&mut v.iter().copied());
    let diff_h = norm2(&mut v.iter().zip(v2.values()).map(|(&a, &b)| h(a) - h(b)));
    let diff = norm2(&mut v.iter().zip(v2.values()).map(|(&a, &b)| a - b));
    Ok(ClampViolations {
        l2: hv > vv + slack(vv),
        gradient: masked_sq > grad_sq + slack(grad_sq),
        transport: transport_h > transport_v + slack(transport_v),
        lipschitz: diff_h > diff + slack(diff),
    })
}

/// Number of random field pairs (out of `trials`) violating any clamp
/// inequality on a 16x16 unit torus.
pub fn clamp_violations(trials: usize, seed: u64) -> Result<usize> {
    let grid = Arc::new(TorusGrid::square(0.5, 16)?);
    let engine = SpectralEngine::new(grid.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut count = 0;
    for _ in 0..trials {
        let shift = rng.random_range(-0.5..0.5);
        let a = random_field(&grid, &mut rng).map(|x| x + shift);
        let b = random_field(&grid, &mut rng);
        if clamp_inequalities(&engine, &a, &b)?.any() {
            count += 1;
        }
    }
    Ok(count)
}

/// One self-test outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: &'static str, value: f64, limit: f64) -> Self {
        Self {
            name,
            value,
            limit,
            passed: value < limit,
        }
    }
}

/// The oracle suite behind `popflow selftest`.
pub fn selftest() -> Result<Vec<Check>> {
    let mut checks = vec![Check::below("convolution vs direct quadrature", convolution_error(100, 1)?, 1e-12)];
    let mut raw_err: f64 = 0.0;
    let mut renorm_err: f64 = 0.0;
    for r in [0.1, 0.2, 0.3, 0.4] {
        let (raw, renorm) = cosine_masses(r, 128)?;
        raw_err = raw_err.max((raw - 1.0).abs());
        renorm_err = renorm_err.max((renorm - 1.0).abs());
    }
    checks.push(Check::below("cosine kernel continuum mass", raw_err, 1e-4));
    checks.push(Check::below("cosine kernel discrete mass", renorm_err, 1e-12));
    let mode = [[1, 0], [2, 3], [5, 5]]
        .into_iter()
        .map(|m| heat_mode_error(32, m, 0.7, 0.01))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(Check::below("heat mode decay", mode, 1e-10));
    checks.push(Check::below("heat semigroup composition", semigroup_defect(32, 1.3, 0.002, 0.005, 2)?, 1e-12));
    checks.push(Check::below("clamp inequality violations", clamp_violations(1000, 3)? as f64, 0.5));
    Ok(checks)
}
