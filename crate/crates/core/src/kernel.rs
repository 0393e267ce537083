//! Interaction kernels `K_ij`: closed forms, grid sampling, and symbols.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, TorusGrid};
use crate::spectral::SpectralEngine;

/// Shape of one interaction kernel. Lengths are in domain units.
///
/// `TopHat` is discontinuous, so it falls outside the smoothness hypotheses
/// of the existence theory; it is provided for experiments only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum KernelSpec {
    /// `pi / (r^2 (pi^2 - 4)) (1 + cos(pi |x| / r))` on the disc of radius `r`.
    #[serde(rename = "cosine")]
    CosineBump { radius: f64 },
    /// Uniform average over the disc (interval in 1D) of radius `r`.
    #[serde(rename = "tophat")]
    TopHat { radius: f64 },
    /// Gaussian of standard deviation `width`, summed over periodic images.
    #[serde(rename = "gaussian")]
    GaussianPeriodic { width: f64 },
    /// The local limit; handled as the all-ones symbol.
    #[serde(rename = "delta")]
    Delta,
}

impl KernelSpec {
    pub fn is_delta(&self) -> bool {
        matches!(self, KernelSpec::Delta)
    }

    /// Support radius (or width) for non-delta kernels.
    pub fn length(&self) -> Option<f64> {
        match *self {
            KernelSpec::CosineBump { radius } | KernelSpec::TopHat { radius } => Some(radius),
            KernelSpec::GaussianPeriodic { width } => Some(width),
            KernelSpec::Delta => None,
        }
    }

    /// Checks positivity and that the support fits inside one period.
    pub fn validate(&self, grid: &TorusGrid) -> Result<()> {
        let Some(len) = self.length() else {
            return Ok(());
        };
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::InvalidKernel(format!(
                "kernel length must be positive, got {len}"
            )));
        }
        let limit = grid.min_half_length();
        if len >= limit {
            return Err(Error::KernelSupport { radius: len, limit });
        }
        Ok(())
    }

    /// Continuum kernel value at a displacement (1 or 2 components).
    pub fn eval(&self, displacement: &[f64]) -> f64 {
        let rho2: f64 = displacement.iter().map(|d| d * d).sum();
        let dim = displacement.len();
        match *self {
            KernelSpec::CosineBump { radius } => eval_cosine_bump(radius, displacement),
            KernelSpec::TopHat { radius } => {
                if rho2 <= radius * radius {
                    match dim {
                        1 => 1.0 / (2.0 * radius),
                        _ => 1.0 / (PI * radius * radius),
                    }
                } else {
                    0.0
                }
            }
            KernelSpec::GaussianPeriodic { width } => {
                let var = width * width;
                (-rho2 / (2.0 * var)).exp() / (2.0 * PI * var).powf(dim as f64 / 2.0)
            }
            KernelSpec::Delta => {
                if rho2 == 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
        }
    }
}

/// The averaging kernel `pi/(r^2(pi^2-4)) (1 + cos(pi rho / r))` for `rho <= r`.
///
/// With a single displacement component the 1D analogue
/// `(1 + cos(pi x / r)) / (2r)` is used, which also has unit mass.
pub fn eval_cosine_bump(radius: f64, displacement: &[f64]) -> f64 {
    let rho2: f64 = displacement.iter().map(|d| d * d).sum();
    if rho2 > radius * radius {
        return 0.0;
    }
    let rho = rho2.sqrt();
    let shape = 1.0 + (PI * rho / radius).cos();
    match displacement.len() {
        1 => shape / (2.0 * radius),
        _ => PI / (radius * radius * (PI * PI - 4.0)) * shape,
    }
}

/// Result of sampling a kernel on a grid.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSample {
    /// Values indexed by displacement: entry `j` holds `K(wrap(j * dx))`.
    Sampled(Field),
    /// Local kernel; there is nothing to sample.
    Delta,
}

/// Kernel evaluated at the minimum-image displacement of every offset,
/// without renormalization.
pub fn sample_raw(spec: &KernelSpec, grid: &Arc<TorusGrid>) -> Result<KernelSample> {
    spec.validate(grid)?;
    if spec.is_delta() {
        return Ok(KernelSample::Delta);
    }
    let dim = grid.dim();
    let values = (0..grid.len())
        .map(|flat| {
            let idx = grid.unravel(flat);
            let mut d = [0.0; 2];
            for (axis, slot) in d.iter_mut().enumerate().take(dim) {
                *slot = grid.wrap(axis, idx[axis] as f64 * grid.spacings()[axis]);
            }
            match *spec {
                KernelSpec::GaussianPeriodic { width } => periodized_gaussian(width, &d[..dim], grid),
                _ => spec.eval(&d[..dim]),
            }
        })
        .collect();
    Ok(KernelSample::Sampled(Field::from_values(grid.clone(), values)))
}

fn periodized_gaussian(width: f64, d: &[f64], grid: &TorusGrid) -> f64 {
    let spec = KernelSpec::GaussianPeriodic { width };
    let images: Vec<isize> = grid
        .half_lengths()
        .iter()
        .map(|l| (8.0 * width / (2.0 * l)).ceil() as isize + 1)
        .collect();
    let mut total = 0.0;
    match d.len() {
        1 => {
            let p = 2.0 * grid.half_lengths()[0];
            for m in -images[0]..=images[0] {
                total += spec.eval(&[d[0] + m as f64 * p]);
            }
        }
        _ => {
            let (px, py) = (2.0 * grid.half_lengths()[0], 2.0 * grid.half_lengths()[1]);
            for mx in -images[0]..=images[0] {
                for my in -images[1]..=images[1] {
                    total += spec.eval(&[d[0] + mx as f64 * px, d[1] + my as f64 * py]);
                }
            }
        }
    }
    total
}

/// `sample_on_grid`: samples the kernel and rescales so its discrete
/// integral is exactly one.
pub fn sample_on_grid(spec: &KernelSpec, grid: &Arc<TorusGrid>) -> Result<KernelSample> {
    match sample_raw(spec, grid)? {
        KernelSample::Delta => Ok(KernelSample::Delta),
        KernelSample::Sampled(f) => {
            let mass = f.integrate();
            if !(mass > 0.0) {
                return Err(Error::InvalidKernel(format!(
                    "kernel {spec:?} has no mass on this grid (support below one cell)"
                )));
            }
            Ok(KernelSample::Sampled(f.scale(1.0 / mass)))
        }
    }
}

/// Symbol `K^` such that `(K * u)^ = K^ u^` in [`SpectralEngine`] normalization.
pub fn kernel_symbol(spec: &KernelSpec, engine: &SpectralEngine) -> Result<Vec<Complex64>> {
    let grid = engine.grid();
    match sample_on_grid(spec, grid)? {
        KernelSample::Delta => Ok(vec![Complex64::new(1.0, 0.0); grid.len()]),
        KernelSample::Sampled(f) => {
            let volume = grid.volume();
            Ok(engine
                .forward(&f)
                .into_coeffs()
                .into_iter()
                .map(|c| c * volume)
                .collect())
        }
    }
}

/// `N x N` table of kernels; entry `(i, j)` is how species `i` senses `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KernelMatrix(pub Vec<Vec<KernelSpec>>);

impl KernelMatrix {
    pub fn uniform(n: usize, spec: KernelSpec) -> Self {
        Self(vec![vec![spec; n]; n])
    }

    pub fn species(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &KernelSpec {
        &self.0[i][j]
    }

    pub fn is_square(&self, n: usize) -> bool {
        self.0.len() == n && self.0.iter().all(|row| row.len() == n)
    }

    pub fn validate(&self, grid: &TorusGrid) -> Result<()> {
        for row in &self.0 {
            for k in row {
                k.validate(grid)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum SymbolKey {
    Cosine(u64),
    TopHat(u64),
    Gaussian(u64),
    Delta,
}

impl From<&KernelSpec> for SymbolKey {
    fn from(spec: &KernelSpec) -> Self {
        match *spec {
            KernelSpec::CosineBump { radius } => SymbolKey::Cosine(radius.to_bits()),
            KernelSpec::TopHat { radius } => SymbolKey::TopHat(radius.to_bits()),
            KernelSpec::GaussianPeriodic { width } => SymbolKey::Gaussian(width.to_bits()),
            KernelSpec::Delta => SymbolKey::Delta,
        }
    }
}

/// Per-grid cache of kernel symbols, shared by reference between threads.
#[derive(Debug)]
pub struct SymbolCache {
    engine: Arc<SpectralEngine>,
    symbols: RwLock<HashMap<SymbolKey, Arc<Vec<Complex64>>>>,
}

impl SymbolCache {
    pub fn new(engine: Arc<SpectralEngine>) -> Self {
        Self {
            engine,
            symbols: RwLock::new(HashMap::new()),
        }
    }

    pub fn engine(&self) -> &Arc<SpectralEngine> {
        &self.engine
    }

    pub fn get(&self, spec: &KernelSpec) -> Result<Arc<Vec<Complex64>>> {
        let key = SymbolKey::from(spec);
        if let Some(s) = self.symbols.read().expect("symbol cache poisoned").get(&key) {
            return Ok(s.clone());
        }
        let symbol = Arc::new(kernel_symbol(spec, &self.engine)?);
        let mut map = self.symbols.write().expect("symbol cache poisoned");
        Ok(map.entry(key).or_insert(symbol).clone())
    }

    pub fn len(&self) -> usize {
        self.symbols.read().expect("symbol cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit2(n: usize) -> Arc<TorusGrid> {
        Arc::new(TorusGrid::square(0.5, n).unwrap())
    }

    #[test]
    fn cosine_bump_values() {
        // 2 pi / (r^2 (pi^2 - 4)) evaluated independently
        let expected = 2.0 * PI / (0.09 * (PI * PI - 4.0));
        assert_abs_diff_eq!(eval_cosine_bump(0.3, &[0.0, 0.0]), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 11.8940, epsilon = 1e-4);
        assert_eq!(eval_cosine_bump(0.3, &[0.3, 0.0]), 0.0);
        assert_eq!(eval_cosine_bump(0.3, &[0.0, 0.4]), 0.0);
        assert_abs_diff_eq!(eval_cosine_bump(0.25, &[0.0]), 2.0 / 0.5, epsilon = 1e-14);
    }

    #[test]
    fn cosine_bump_one_dimensional_unit_mass() {
        let g = Arc::new(TorusGrid::new(&[0.5], &[4096]).unwrap());
        let KernelSample::Sampled(f) = sample_raw(&KernelSpec::CosineBump { radius: 0.2 }, &g).unwrap() else {
            panic!()
        };
        assert_abs_diff_eq!(f.integrate(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn sampled_kernels_have_unit_mass_and_are_nonnegative() {
        let g = unit2(64);
        for spec in [
            KernelSpec::CosineBump { radius: 0.3 },
            KernelSpec::TopHat { radius: 0.2 },
            KernelSpec::GaussianPeriodic { width: 0.1 },
        ] {
            let KernelSample::Sampled(f) = sample_on_grid(&spec, &g).unwrap() else {
                panic!()
            };
            assert_abs_diff_eq!(f.integrate(), 1.0, epsilon = 1e-12);
            assert!(f.min() >= 0.0);
            // symmetric under index negation
            for flat in 0..g.len() {
                let [a, b] = g.unravel(flat);
                let m = g.ravel([(64 - a) % 64, (64 - b) % 64]);
                assert_abs_diff_eq!(f.values()[flat], f.values()[m], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn tophat_is_constant_inside() {
        let g = unit2(64);
        let KernelSample::Sampled(f) = sample_raw(&KernelSpec::TopHat { radius: 0.2 }, &g).unwrap() else {
            panic!()
        };
        assert_abs_diff_eq!(f.values()[0], 1.0 / (PI * 0.04), epsilon = 1e-12);
        assert_eq!(f.values()[g.ravel([0, 20])], 0.0);
    }

    #[test]
    fn support_must_fit() {
        let g = unit2(32);
        assert!(matches!(
            sample_on_grid(&KernelSpec::CosineBump { radius: 0.6 }, &g),
            Err(Error::KernelSupport { .. })
        ));
        assert!(sample_on_grid(&KernelSpec::CosineBump { radius: -0.1 }, &g).is_err());
        assert_eq!(sample_on_grid(&KernelSpec::Delta, &g).unwrap(), KernelSample::Delta);
    }

    #[test]
    fn symbols() {
        let e = SpectralEngine::new(unit2(32));
        let delta = kernel_symbol(&KernelSpec::Delta, &e).unwrap();
        assert!(delta.iter().all(|c| *c == Complex64::new(1.0, 0.0)));
        let cos = kernel_symbol(&KernelSpec::CosineBump { radius: 0.3 }, &e).unwrap();
        assert_abs_diff_eq!(cos[0].re, 1.0, epsilon = 1e-12);
        assert!(cos.iter().all(|c| c.im.abs() < 1e-12));
        let mirror = crate::spectral::mirror_index(e.grid());
        for k in 0..cos.len() {
            assert!((cos[k] - cos[mirror[k]]).norm() < 1e-12);
        }
    }

    #[test]
    fn cache_returns_shared_symbols() {
        let cache = SymbolCache::new(Arc::new(SpectralEngine::new(unit2(16))));
        let a = cache.get(&KernelSpec::CosineBump { radius: 0.3 }).unwrap();
        let b = cache.get(&KernelSpec::CosineBump { radius: 0.3 }).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        cache.get(&KernelSpec::Delta).unwrap();
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn spec_serde_names() {
        let s: KernelSpec = toml::from_str("kind = \"cosine\"\nradius = 0.3").unwrap();
        assert_eq!(s, KernelSpec::CosineBump { radius: 0.3 });
        let s: KernelSpec = toml::from_str("kind = \"delta\"").unwrap();
        assert_eq!(s, KernelSpec::Delta);
        let s: KernelSpec = toml::from_str("kind = \"gaussian\"\nwidth = 0.05").unwrap();
        assert_eq!(s, KernelSpec::GaussianPeriodic { width: 0.05 });
    }
}
