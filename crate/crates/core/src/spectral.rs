//! Fourier-space operators on a [`TorusGrid`].
//!
//! Normalization: the forward transform divides by the node count, so the
//! zero mode holds the mean of the field and `inverse(forward(u)) == u`.
//! With that convention a kernel symbol is `|T^n| * forward(K)`, which makes
//! `K * u` (continuum convolution) a plain pointwise product in mode space.
//!
//! First-derivative multipliers `i k` vanish on the Nyquist modes so the
//! derivative of a real field stays real. The Laplacian and the heat
//! semigroup use the full `|k|^2`.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Field, TorusGrid};

/// Complex Fourier coefficients of a field in the grid's mode ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Arc<TorusGrid>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Arc<TorusGrid>, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.len());
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Largest violation of `c(-k) = conj(c(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        let mirror = mirror_index(&self.grid);
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (c - self.coeffs[mirror[i]].conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// Flat index of `-k` for every flat index `k`.
pub(crate) fn mirror_index(grid: &TorusGrid) -> Vec<usize> {
    let pts = grid.points();
    (0..grid.len())
        .map(|flat| {
            let idx = grid.unravel(flat);
            let mut m = [0usize; 2];
            for axis in 0..grid.dim() {
                m[axis] = (pts[axis] - idx[axis]) % pts[axis];
            }
            grid.ravel(m)
        })
        .collect()
}

/// Transforms and Fourier multipliers for one grid.
///
/// Plans are shared behind `Arc` and every method takes `&self`, so one
/// engine can serve several threads. FFT scratch is kept per thread.
pub struct SpectralEngine {
    grid: Arc<TorusGrid>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    /// Per-axis derivative wavenumbers (Nyquist zeroed), expanded to the flat layout.
    deriv: Vec<Vec<f64>>,
    /// `|k|^2` on the flat layout.
    k_squared: Vec<f64>,
    /// Per-axis `k^2`, for separable heat factors.
    axis_k_squared: Vec<Vec<f64>>,
    mirror: Vec<usize>,
    dealias: Vec<bool>,
}

impl std::fmt::Debug for SpectralEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralEngine")
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

impl SpectralEngine {
    pub fn new(grid: Arc<TorusGrid>) -> Self {
        let mut planner = FftPlanner::new();
        let forward = grid
            .points()
            .iter()
            .map(|&n| planner.plan_fft_forward(n))
            .collect();
        let inverse = grid
            .points()
            .iter()
            .map(|&n| planner.plan_fft_inverse(n))
            .collect();

        let axis_k = grid.wavenumbers();
        let len = grid.len();
        let mut deriv = vec![vec![0.0; len]; grid.dim()];
        let mut k_squared = vec![0.0; len];
        let mut dealias = vec![false; len];
        for flat in 0..len {
            let idx = grid.unravel(flat);
            for axis in 0..grid.dim() {
                let n = grid.points()[axis];
                let k = axis_k[axis][idx[axis]];
                k_squared[flat] += k * k;
                deriv[axis][flat] = if idx[axis] == n / 2 { 0.0 } else { k };
                // 2/3 rule: keep |j| <= n/3
                let j = idx[axis].min(n - idx[axis]);
                if 3 * j > n {
                    dealias[flat] = true;
                }
            }
        }
        let mirror = mirror_index(&grid);
        let axis_k_squared = axis_k.iter().map(|ks| ks.iter().map(|k| k * k).collect()).collect();
        Self {
            grid,
            forward,
            inverse,
            deriv,
            k_squared,
            axis_k_squared,
            mirror,
            dealias,
        }
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn k_squared(&self) -> &[f64] {
        &self.k_squared
    }

    /// Derivative wavenumbers along `axis` on the flat layout.
    pub fn derivative_wavenumbers(&self, axis: usize) -> &[f64] {
        &self.deriv[axis]
    }

    fn check(&self, f: &Field) -> Result<()> {
        if f.grid().as_ref() == self.grid.as_ref() {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn transform(&self, buf: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        thread_local! {
            static SCRATCH: RefCell<(Vec<Complex64>, Vec<Complex64>)> = const { RefCell::new((Vec::new(), Vec::new())) };
        }
        SCRATCH.with(|cell| {
            let (scratch, t) = &mut *cell.borrow_mut();
            let need = plans.iter().map(|p| p.get_inplace_scratch_len()).max().unwrap_or(0);
            if scratch.len() < need {
                scratch.resize(need, Complex64::default());
            }
            let pts = self.grid.points();
            match pts.len() {
                1 => plans[0].process_with_scratch(buf, &mut scratch[..need]),
                _ => {
                    let (nx, ny) = (pts[0], pts[1]);
                    // rows (contiguous, length ny)
                    plans[1].process_with_scratch(buf, &mut scratch[..need]);
                    // columns via transpose
                    t.resize(nx * ny, Complex64::default());
                    transpose::transpose(buf, t, ny, nx);
                    plans[0].process_with_scratch(t, &mut scratch[..need]);
                    transpose::transpose(t, buf, nx, ny);
                }
            }
        });
    }

    /// In-place normalized forward transform of a complex buffer.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.forward);
        let inv_n = 1.0 / buf.len() as f64;
        for c in buf.iter_mut() {
            *c *= inv_n;
        }
    }

    /// In-place forward transform without the `1/len` factor.
    pub(crate) fn forward_unscaled_in_place(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.forward);
    }

    /// Flat index of `-k` for every `k`.
    pub(crate) fn mirror(&self) -> &[usize] {
        &self.mirror
    }

    /// In-place inverse transform (no scaling) of a complex buffer.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.inverse);
    }

    pub fn forward(&self, u: &Field) -> SpectralField {
        debug_assert!(self.check(u).is_ok());
        let mut buf: Vec<Complex64> = u.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_in_place(&mut buf);
        SpectralField::new(self.grid.clone(), buf)
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse(&self, s: &SpectralField) -> Field {
        Field::from_values(self.grid.clone(), self.inverse_real(s.coeffs()))
    }

    pub fn inverse_real(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse_in_place(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Transforms two real fields with one complex FFT.
    pub fn forward_pair(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut fa = vec![Complex64::default(); a.len()];
        let mut fb = vec![Complex64::default(); a.len()];
        self.forward_pair_into(a, b, &mut fa, &mut fb);
        (fa, fb)
    }

    /// [`Self::forward_pair`] writing into caller buffers.
    pub fn forward_pair_into(&self, a: &[f64], b: &[f64], fa: &mut [Complex64], fb: &mut [Complex64]) {
        for ((z, &x), &y) in fa.iter_mut().zip(a).zip(b) {
            *z = Complex64::new(x, y);
        }
        self.forward_in_place(fa);
        // fa holds z; split z(k) and conj z(-k) in place pairwise
        for k in 0..fa.len() {
            let m = self.mirror[k];
            if m < k {
                continue;
            }
            let (zk, zm) = (fa[k], fa[m]);
            let (ak, bk) = split(zk, zm.conj());
            let (am, bm) = split(zm, zk.conj());
            fa[k] = ak;
            fb[k] = bk;
            fa[m] = am;
            fb[m] = bm;
        }
    }

    /// Forward transform of one real field.
    pub fn forward_real_into(&self, a: &[f64], out: &mut [Complex64]) {
        for (z, &x) in out.iter_mut().zip(a) {
            *z = Complex64::new(x, 0.0);
        }
        self.forward_in_place(out);
    }

    /// Inverse of two Hermitian spectra with one complex FFT.
    pub fn inverse_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let mut ra = vec![0.0; a.len()];
        let mut rb = vec![0.0; a.len()];
        self.inverse_pair_into(a, b, &mut ra, &mut rb);
        (ra, rb)
    }

    /// [`Self::inverse_pair`] writing into caller buffers.
    pub fn inverse_pair_into(&self, a: &[Complex64], b: &[Complex64], ra: &mut [f64], rb: &mut [f64]) {
        with_buffer(a.len(), |z| {
            for ((zk, x), y) in z.iter_mut().zip(a).zip(b) {
                *zk = x + Complex64::new(-y.im, y.re);
            }
            self.inverse_in_place(z);
            for ((c, x), y) in z.iter().zip(ra.iter_mut()).zip(rb.iter_mut()) {
                *x = c.re;
                *y = c.im;
            }
        });
    }

    /// Inverse transform of one Hermitian spectrum, real part only.
    pub fn inverse_real_into(&self, a: &[Complex64], out: &mut [f64]) {
        with_buffer(a.len(), |z| {
            z.copy_from_slice(a);
            self.inverse_in_place(z);
            for (x, c) in out.iter_mut().zip(z.iter()) {
                *x = c.re;
            }
        });
    }

    /// `K * u` for a kernel symbol in this engine's normalization.
    pub fn convolve(&self, symbol: &[Complex64], u: &Field) -> Result<Field> {
        self.check(u)?;
        if symbol.len() != self.grid.len() {
            return Err(Error::GridMismatch);
        }
        let mut s = self.forward(u);
        for (c, k) in s.coeffs_mut().iter_mut().zip(symbol) {
            *c *= k;
        }
        Ok(self.inverse(&s))
    }

    /// Multiplies coefficients by `i k_axis` in place.
    pub fn apply_derivative(&self, axis: usize, coeffs: &mut [Complex64]) {
        for (c, &k) in coeffs.iter_mut().zip(&self.deriv[axis]) {
            *c = Complex64::new(-k * c.im, k * c.re);
        }
    }

    pub fn gradient(&self, u: &Field) -> Result<Vec<Field>> {
        self.check(u)?;
        let s = self.forward(u);
        Ok((0..self.grid.dim())
            .map(|axis| {
                let mut c = s.coeffs().to_vec();
                self.apply_derivative(axis, &mut c);
                Field::from_values(self.grid.clone(), self.inverse_real(&c))
            })
            .collect())
    }

    pub fn divergence(&self, v: &[Field]) -> Result<Field> {
        if v.len() != self.grid.dim() {
            return Err(Error::GridMismatch);
        }
        let mut acc = vec![Complex64::default(); self.grid.len()];
        for (axis, comp) in v.iter().enumerate() {
            self.check(comp)?;
            let mut c = self.forward(comp).into_coeffs();
            self.apply_derivative(axis, &mut c);
            for (a, x) in acc.iter_mut().zip(&c) {
                *a += x;
            }
        }
        Ok(Field::from_values(self.grid.clone(), self.inverse_real(&acc)))
    }

    pub fn laplacian(&self, u: &Field) -> Result<Field> {
        self.check(u)?;
        let mut s = self.forward(u);
        for (c, &k2) in s.coeffs_mut().iter_mut().zip(&self.k_squared) {
            *c *= -k2;
        }
        Ok(self.inverse(&s))
    }

    /// Multipliers `exp(-D |k|^2 tau)` of the heat semigroup.
    pub fn heat_factors(&self, diffusion: f64, tau: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        self.heat_factors_into(diffusion, tau, &mut out);
        out
    }

    /// [`Self::heat_factors`] into a caller buffer, using one `exp` per
    /// axis wavenumber.
    pub fn heat_factors_into(&self, diffusion: f64, tau: f64, out: &mut [f64]) {
        let per_axis: Vec<Vec<f64>> = self
            .axis_k_squared
            .iter()
            .map(|ks| ks.iter().map(|&k2| (-diffusion * k2 * tau).exp()).collect())
            .collect();
        match per_axis.as_slice() {
            [x] => out.copy_from_slice(x),
            [x, y] => {
                for (row, chunk) in out.chunks_exact_mut(y.len()).enumerate() {
                    for (o, &fy) in chunk.iter_mut().zip(y) {
                        *o = x[row] * fy;
                    }
                }
            }
            _ => unreachable!("grids are one- or two-dimensional"),
        }
    }

    /// Exact discrete heat flow `e^{tau D Laplacian} u`.
    pub fn heat_propagate(&self, u: &Field, diffusion: f64, tau: f64) -> Result<Field> {
        self.check(u)?;
        let mut s = self.forward(u);
        for (c, f) in s.coeffs_mut().iter_mut().zip(self.heat_factors(diffusion, tau)) {
            *c *= f;
        }
        Ok(self.inverse(&s))
    }

    /// Zeroes modes outside the 2/3-rule band.
    pub fn dealias(&self, coeffs: &mut [Complex64]) {
        for (c, &cut) in coeffs.iter_mut().zip(&self.dealias) {
            if cut {
                *c = Complex64::default();
            }
        }
    }
}

/// `(z + w) / 2` and `(z - w) / 2i` for `w = conj z(-k)`.
#[inline]
fn split(z: Complex64, w: Complex64) -> (Complex64, Complex64) {
    let d = z - w;
    ((z + w) * 0.5, Complex64::new(d.im * 0.5, -d.re * 0.5))
}

/// Runs `f` with a per-thread complex buffer of length `len`.
fn with_buffer<R>(len: usize, f: impl FnOnce(&mut [Complex64]) -> R) -> R {
    thread_local! {
        static BUF: RefCell<Vec<Complex64>> = const { RefCell::new(Vec::new()) };
    }
    BUF.with(|cell| {
        let mut buf = cell.borrow_mut();
        buf.resize(len, Complex64::default());
        f(&mut buf)
    })
}
