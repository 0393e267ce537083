//! The discrete periodic domain and the fields sampled on it.
//!
//! A [`TorusGrid`] covers `[-L_1, L_1) x ... x [-L_n, L_n)` with the faces
//! identified. Nodes sit at `-L_k + j * dx_k` (left-closed), and fields are
//! stored row-major with the last axis fastest.

use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Smallest per-axis node count accepted by [`TorusGrid::new`].
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct TorusGrid {
    half_lengths: Vec<f64>,
    points: Vec<usize>,
    spacings: Vec<f64>,
}

impl TorusGrid {
    /// Builds a grid of dimension `half_lengths.len()` (1 or 2).
    pub fn new(half_lengths: &[f64], points: &[usize]) -> Result<Self> {
        let dim = half_lengths.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if points.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "{} half-lengths but {} point counts",
                dim,
                points.len()
            )));
        }
        for (axis, (&l, &n)) in half_lengths.iter().zip(points).enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "half-length on axis {axis} must be positive, got {l}"
                )));
            }
            if n < MIN_POINTS || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "point count on axis {axis} must be even and >= {MIN_POINTS}, got {n}"
                )));
            }
        }
        let spacings = half_lengths
            .iter()
            .zip(points)
            .map(|(&l, &n)| 2.0 * l / n as f64)
            .collect();
        Ok(Self {
            half_lengths: half_lengths.to_vec(),
            points: points.to_vec(),
            spacings,
        })
    }

    /// `make_grid(dim, half_lengths, points)`: same as [`TorusGrid::new`] but
    /// with the dimension stated explicitly and cross-checked.
    pub fn with_dim(dim: usize, half_lengths: &[f64], points: &[usize]) -> Result<Self> {
        if half_lengths.len() != dim || points.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "dim = {dim} but got {} half-lengths and {} point counts",
                half_lengths.len(),
                points.len()
            )));
        }
        Self::new(half_lengths, points)
    }

    /// Square 2D grid `[-l, l)^2` with `n x n` nodes.
    pub fn square(l: f64, n: usize) -> Result<Self> {
        Self::new(&[l, l], &[n, n])
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn half_lengths(&self) -> &[f64] {
        &self.half_lengths
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn spacings(&self) -> &[f64] {
        &self.spacings
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume of one cell, `prod dx_k`.
    pub fn cell_volume(&self) -> f64 {
        self.spacings.iter().product()
    }

    /// `|T^n| = prod 2 L_k`.
    pub fn volume(&self) -> f64 {
        self.half_lengths.iter().map(|l| 2.0 * l).product()
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacings.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_half_length(&self) -> f64 {
        self.half_lengths
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Coordinate of node `j` along `axis`.
    pub fn coordinate(&self, axis: usize, j: usize) -> f64 {
        -self.half_lengths[axis] + j as f64 * self.spacings[axis]
    }

    /// Node coordinates along one axis.
    pub fn axis_coordinates(&self, axis: usize) -> Vec<f64> {
        (0..self.points[axis])
            .map(|j| self.coordinate(axis, j))
            .collect()
    }

    /// Splits a flat row-major index into per-axis indices.
    pub fn unravel(&self, flat: usize) -> [usize; 2] {
        match self.dim() {
            1 => [flat, 0],
            _ => [flat / self.points[1], flat % self.points[1]],
        }
    }

    pub fn ravel(&self, idx: [usize; 2]) -> usize {
        match self.dim() {
            1 => idx[0],
            _ => idx[0] * self.points[1] + idx[1],
        }
    }

    /// Physical position of a flat index (unused axes are zero).
    pub fn position(&self, flat: usize) -> [f64; 2] {
        let idx = self.unravel(flat);
        let mut p = [0.0; 2];
        for (axis, slot) in p.iter_mut().enumerate().take(self.dim()) {
            *slot = self.coordinate(axis, idx[axis]);
        }
        p
    }

    /// Minimum-image representative of a displacement along `axis`, in `[-L, L)`.
    pub fn wrap(&self, axis: usize, d: f64) -> f64 {
        let l = self.half_lengths[axis];
        let period = 2.0 * l;
        let w = (d + l).rem_euclid(period) - l;
        // rem_euclid can round up to exactly `period`
        if w >= l {
            w - period
        } else {
            w
        }
    }

    /// Angular wavenumbers `pi j / L` in standard FFT ordering
    /// `0, 1, .., n/2, -(n/2 - 1), .., -1`.
    pub fn wavenumbers(&self) -> Vec<Vec<f64>> {
        self.half_lengths
            .iter()
            .zip(&self.points)
            .map(|(&l, &n)| {
                (0..n)
                    .map(|j| {
                        let signed = if j <= n / 2 {
                            j as f64
                        } else {
                            j as f64 - n as f64
                        };
                        std::f64::consts::PI * signed / l
                    })
                    .collect()
            })
            .collect()
    }

    /// Fills a field by evaluating `f` at every node position.
    pub fn sample(self: &Arc<Self>, f: impl Fn([f64; 2]) -> f64) -> Field {
        let values = (0..self.len()).map(|i| f(self.position(i))).collect();
        Field::from_values(self.clone(), values)
    }
}

/// One species' density sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<TorusGrid>,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Arc<TorusGrid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Arc<TorusGrid>, c: f64) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![c; n],
        }
    }

    /// Wraps raw values.
    ///
    /// # Panics
    /// If `values.len()` differs from the grid size.
    pub fn from_values(grid: Arc<TorusGrid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "field size does not match grid");
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Rectangle-rule integral `sum(values) * prod dx_k`.
    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Discrete L2 norm `sqrt(sum v^2 dV)`.
    pub fn l2(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// Discrete L1 norm.
    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_volume()
    }

    /// L2 norm of the negative part `min(u, 0)`.
    pub fn negative_part_l2(&self) -> f64 {
        (self
            .values
            .iter()
            .map(|&v| if v < 0.0 { v * v } else { 0.0 })
            .sum::<f64>()
            * self.grid.cell_volume())
        .sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    /// Circular shift by whole cells: `out[j] = self[j - shift]` per axis.
    pub fn shifted(&self, shift: &[isize]) -> Field {
        let g = &self.grid;
        let mut out = vec![0.0; self.values.len()];
        for (flat, &v) in self.values.iter().enumerate() {
            let idx = g.unravel(flat);
            let mut dst = [0usize; 2];
            for axis in 0..g.dim() {
                let n = g.points()[axis] as isize;
                let s = shift.get(axis).copied().unwrap_or(0);
                dst[axis] = (idx[axis] as isize + s).rem_euclid(n) as usize;
            }
            out[g.ravel(dst)] = v;
        }
        Field::from_values(self.grid.clone(), out)
    }
}

fn zip_with(a: &Field, b: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
    assert!(a.same_grid(b), "fields live on different grids");
    Field {
        grid: a.grid.clone(),
        values: a
            .values
            .iter()
            .zip(&b.values)
            .map(|(&x, &y)| f(x, y))
            .collect(),
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        zip_with(self, rhs, |a, b| a + b)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        zip_with(self, rhs, |a, b| a - b)
    }
}

impl Mul for &Field {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        zip_with(self, rhs, |a, b| a * b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn unit2(n: usize) -> Arc<TorusGrid> {
        Arc::new(TorusGrid::square(0.5, n).unwrap())
    }

    #[test]
    fn make_grid_derives_spacing_and_volume() {
        let g = TorusGrid::with_dim(2, &[0.5, 0.5], &[128, 128]).unwrap();
        assert_eq!(g.spacings(), &[1.0 / 128.0, 1.0 / 128.0]);
        assert_eq!(g.volume(), 1.0);
        let g = TorusGrid::with_dim(1, &[0.5], &[256]).unwrap();
        assert_eq!(g.spacings(), &[1.0 / 256.0]);
        assert_eq!(g.volume(), 1.0);
    }

    #[test]
    fn make_grid_rejects_bad_input() {
        assert!(TorusGrid::with_dim(2, &[0.5, 0.5], &[7, 128]).is_err());
        assert!(TorusGrid::new(&[0.5], &[6]).is_err());
        assert!(TorusGrid::new(&[0.0], &[16]).is_err());
        assert!(TorusGrid::new(&[-1.0, 1.0], &[16, 16]).is_err());
        assert!(TorusGrid::new(&[1.0, 1.0, 1.0], &[8, 8, 8]).is_err());
        assert!(TorusGrid::with_dim(2, &[0.5], &[16]).is_err());
    }

    #[test]
    fn spacing_times_points_is_side_length() {
        let g = TorusGrid::new(&[0.5, 1.25], &[64, 32]).unwrap();
        for axis in 0..2 {
            let side = g.spacings()[axis] * g.points()[axis] as f64;
            assert_eq!(side, 2.0 * g.half_lengths()[axis]);
        }
        let xs = g.axis_coordinates(1);
        assert_eq!(xs[0], -1.25);
        assert!(*xs.last().unwrap() < 1.25);
    }

    #[test]
    fn integrate_constant_and_odd_mode() {
        let g = unit2(32);
        assert_abs_diff_eq!(Field::constant(g.clone(), 1.0).integrate(), 1.0, epsilon = 1e-15);
        let s = g.sample(|p| (2.0 * PI * p[0]).sin());
        assert_abs_diff_eq!(s.integrate(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn integrate_gaussian_matches_refined_grid() {
        // oracle: the same bump on a 4x finer grid
        let bump = |p: [f64; 2]| (-(p[0] * p[0] + p[1] * p[1]) / (2.0 * 0.08 * 0.08)).exp();
        let coarse = unit2(64).sample(bump).integrate();
        let fine = unit2(256).sample(bump).integrate();
        assert!((coarse - fine).abs() < 1e-10, "{coarse} vs {fine}");
    }

    #[test]
    fn wavenumber_ordering() {
        let g = TorusGrid::new(&[0.5], &[8]).unwrap();
        let k = &g.wavenumbers()[0];
        assert_abs_diff_eq!(k[1], 2.0 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(k[4], 8.0 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(k[5], -6.0 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(k[7], -2.0 * PI, epsilon = 1e-15);
    }

    #[test]
    fn wrap_is_min_image() {
        let g = TorusGrid::square(0.5, 16).unwrap();
        assert_abs_diff_eq!(g.wrap(0, 0.75), -0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(g.wrap(0, -0.75), 0.25, epsilon = 1e-15);
        assert_eq!(g.wrap(0, 0.5), -0.5);
        assert_eq!(g.wrap(0, -0.5), -0.5);
    }

    #[test]
    fn shift_round_trip() {
        let g = unit2(8);
        let f = Field::from_values(g.clone(), (0..64).map(|v| v as f64).collect());
        assert_eq!(f.shifted(&[3, -2]).shifted(&[-3, 2]), f);
        assert_eq!(f.shifted(&[1, 0]).values()[8], 0.0);
    }
}
