//! Initial densities.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, TorusGrid};

/// How to build the initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    /// `u_i = m_i/|T| (1 + a xi)`, `xi ~ U(-1, 1)` i.i.d. per cell, then
    /// clamped at zero and rescaled to mass `m_i`.
    UniformNoise { masses: Vec<f64>, amplitude: f64, seed: u64 },
    /// Periodic Gaussian bumps `exp(-|x - c_i|^2 / 2w^2)` scaled to mass `m_i`.
    GaussianBump {
        masses: Vec<f64>,
        centers: Vec<Vec<f64>>,
        width: f64,
    },
}

impl InitialCondition {
    pub fn masses(&self) -> &[f64] {
        match self {
            Self::UniformNoise { masses, .. } | Self::GaussianBump { masses, .. } => masses,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Self::UniformNoise { seed, .. } => Some(*seed),
            Self::GaussianBump { .. } => None,
        }
    }

    pub fn with_seed(mut self, new_seed: u64) -> Self {
        if let Self::UniformNoise { seed, .. } = &mut self {
            *seed = new_seed;
        }
        self
    }

    pub fn build(&self, grid: &Arc<TorusGrid>) -> Result<Vec<Field>> {
        if let Some(m) = self.masses().iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::config("ic.masses", format!("masses must be positive, got {m}")));
        }
        match self {
            Self::UniformNoise { masses, amplitude, seed } => {
                if !(amplitude.is_finite() && *amplitude >= 0.0) {
                    return Err(Error::config("ic.amplitude", "must be finite and nonnegative"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                masses
                    .iter()
                    .map(|&m| {
                        let base = m / grid.volume();
                        let values = (0..grid.len())
                            .map(|_| (base * (1.0 + amplitude * rng.random_range(-1.0..1.0))).max(0.0))
                            .collect();
                        normalized(Field::from_values(grid.clone(), values), m)
                    })
                    .collect()
            }
            Self::GaussianBump { masses, centers, width } => {
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::config("ic.width", "must be positive"));
                }
                if centers.len() != masses.len() {
                    return Err(Error::config(
                        "ic.centers",
                        format!("expected {} centers, got {}", masses.len(), centers.len()),
                    ));
                }
                masses
                    .iter()
                    .zip(centers)
                    .map(|(&m, c)| {
                        if c.len() != grid.dim() {
                            return Err(Error::config(
                                "ic.centers",
                                format!("each center needs {} coordinates", grid.dim()),
                            ));
                        }
                        let f = grid.sample(|p| {
                            let r2: f64 = (0..grid.dim())
                                .map(|a| grid.wrap(a, p[a] - c[a]).powi(2))
                                .sum();
                            (-r2 / (2.0 * width * width)).exp()
                        });
                        normalized(f, m)
                    })
                    .collect()
            }
        }
    }
}

fn normalized(f: Field, mass: f64) -> Result<Field> {
    let total = f.integrate();
    if !(total > 0.0) {
        return Err(Error::ZeroMass);
    }
    Ok(f.scale(mass / total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> Arc<TorusGrid> {
        Arc::new(TorusGrid::square(0.5, 16).unwrap())
    }

    #[test]
    fn noise_has_target_mass_and_is_nonnegative() {
        let ic = InitialCondition::UniformNoise {
            masses: vec![1.0, 2.5],
            amplitude: 1.5,
            seed: 7,
        };
        let fields = ic.build(&grid()).unwrap();
        for (f, m) in fields.iter().zip([1.0, 2.5]) {
            assert_relative_eq!(f.integrate(), m, max_relative = 1e-14);
            assert!(f.min() >= 0.0);
        }
    }

    #[test]
    fn noise_is_seeded() {
        let ic = |seed| InitialCondition::UniformNoise {
            masses: vec![1.0],
            amplitude: 0.1,
            seed,
        };
        let g = grid();
        assert_eq!(ic(3).build(&g).unwrap(), ic(3).build(&g).unwrap());
        assert_ne!(ic(3).build(&g).unwrap(), ic(4).build(&g).unwrap());
        assert_eq!(ic(3).with_seed(4), ic(4));
    }

    #[test]
    fn zero_amplitude_is_uniform() {
        let ic = InitialCondition::UniformNoise {
            masses: vec![2.0],
            amplitude: 0.0,
            seed: 1,
        };
        let f = &ic.build(&grid()).unwrap()[0];
        assert!(f.values().iter().all(|&v| (v - 2.0).abs() < 1e-14));
    }

    #[test]
    fn bump_mass_and_peak() {
        let g = grid();
        let ic = InitialCondition::GaussianBump {
            masses: vec![1.0],
            centers: vec![vec![0.0, 0.0]],
            width: 0.1,
        };
        let f = &ic.build(&g).unwrap()[0];
        assert_relative_eq!(f.integrate(), 1.0, max_relative = 1e-14);
        assert_eq!(f.max(), f.values()[g.ravel([8, 8])]);
    }

    #[test]
    fn rejects_bad_input() {
        let g = grid();
        let bad = InitialCondition::GaussianBump {
            masses: vec![1.0, 1.0],
            centers: vec![vec![0.0, 0.0]],
            width: 0.1,
        };
        assert!(matches!(bad.build(&g), Err(Error::ConfigValue { key, .. }) if key == "ic.centers"));
        let bad = InitialCondition::UniformNoise {
            masses: vec![-1.0],
            amplitude: 0.1,
            seed: 0,
        };
        assert!(bad.build(&g).is_err());
    }
}
