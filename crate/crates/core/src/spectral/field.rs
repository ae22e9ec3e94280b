use num_complex::Complex64;

use super::grid::GridSpec;
use super::transform;
use crate::error::{Error, Result};

/// Properties a field is expected to carry; see [`SpectralField::flags`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldFlags {
    pub hermitian: bool,
    pub solenoidal: bool,
    pub zero_mean: bool,
}

/// A field stored as Fourier coefficients, components outermost.
///
/// Velocity fields have `dim` components; the same container also holds
/// scalar fields (one component) where that is convenient.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    ncomp: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self::zeros_with(grid, grid.dim())
    }

    pub fn zeros_with(grid: &GridSpec, ncomp: usize) -> Self {
        Self {
            grid: grid.clone(),
            ncomp,
            coeffs: vec![Complex64::new(0.0, 0.0); ncomp * grid.len()],
        }
    }

    pub fn from_coeffs(grid: GridSpec, ncomp: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        let expected = ncomp * grid.len();
        if coeffs.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                actual: coeffs.len(),
            });
        }
        Ok(Self {
            grid,
            ncomp,
            coeffs,
        })
    }

    /// Samples a vector field on the grid and transforms it. Only the
    /// first `dim` entries of the returned array are used.
    pub fn from_fn(grid: &GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let dim = grid.dim();
        let mut values = vec![vec![0.0; grid.len()]; dim];
        for idx in 0..grid.len() {
            let v = f(grid.point(idx));
            for c in 0..dim {
                values[c][idx] = v[c];
            }
        }
        transform::to_spectral(&values, grid).expect("shape is consistent by construction")
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
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

    pub fn component(&self, c: usize) -> &[Complex64] {
        let len = self.grid.len();
        &self.coeffs[c * len..(c + 1) * len]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let len = self.grid.len();
        &mut self.coeffs[c * len..(c + 1) * len]
    }

    /// Coefficient vector `û(k)` at one mode.
    pub fn mode(&self, idx: usize) -> [Complex64; 3] {
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (c, slot) in out.iter_mut().enumerate().take(self.ncomp) {
            *slot = self.coeffs[c * self.grid.len() + idx];
        }
        out
    }

    pub fn set_mode(&mut self, idx: usize, value: &[Complex64]) {
        let len = self.grid.len();
        for (c, v) in value.iter().enumerate().take(self.ncomp) {
            self.coeffs[c * len + idx] = *v;
        }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.ncomp != other.ncomp {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        out.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, b)| *a += b);
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        out.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, b)| *a -= b);
        Ok(out)
    }

    /// `self + factor * other`
    pub fn axpy(&self, factor: f64, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        out.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, b)| *a += b * factor);
        Ok(out)
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|a| *a *= factor);
        out
    }

    /// Applies a real per-mode factor to every component.
    pub fn map_modes(&self, factor: impl Fn(usize) -> f64) -> Self {
        let len = self.grid.len();
        let weights: Vec<f64> = (0..len).map(factor).collect();
        let mut out = self.clone();
        for chunk in out.coeffs.chunks_mut(len) {
            for (c, w) in chunk.iter_mut().zip(&weights) {
                *c *= *w;
            }
        }
        out
    }

    /// Plain Euclidean norm of the stored coefficients.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Physical L² norm over `[0, 2π]^dim`.
    pub fn l2_norm(&self) -> f64 {
        self.grid.volume().sqrt() * self.coeff_norm()
    }

    /// Physical L² inner product of two real fields.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum();
        Ok(self.grid.volume() * s)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `û(-k) = conj(û(k))` on every mode, to `tol` relative to the largest coefficient.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let len = self.grid.len();
        (0..self.ncomp).all(|c| {
            let comp = &self.coeffs[c * len..(c + 1) * len];
            (0..len).all(|i| (comp[i] - comp[self.grid.partner(i)].conj()).norm() <= tol * scale)
        })
    }

    /// `|k·û(k)| ≤ tol · ‖û‖` on every mode.
    pub fn is_solenoidal(&self, tol: f64) -> bool {
        if self.ncomp != self.grid.dim() {
            return false;
        }
        let bound = tol * self.coeff_norm();
        (0..self.grid.len()).all(|i| self.divergence_at(i).norm() <= bound)
    }

    pub fn is_zero_mean(&self) -> bool {
        (0..self.ncomp).all(|c| self.coeffs[c * self.grid.len()] == Complex64::new(0.0, 0.0))
    }

    pub fn flags(&self) -> FieldFlags {
        FieldFlags {
            hermitian: self.is_hermitian(1e-12),
            solenoidal: self.is_solenoidal(1e-12),
            zero_mean: self.is_zero_mean(),
        }
    }

    /// `k·û(k)` at one mode.
    pub fn divergence_at(&self, idx: usize) -> Complex64 {
        let k = self.grid.wavevector(idx);
        let u = self.mode(idx);
        (0..self.grid.dim()).map(|a| u[a] * k[a] as f64).sum()
    }

    /// Zeroes the `k = 0` mode.
    pub fn remove_mean(&mut self) {
        let len = self.grid.len();
        for c in 0..self.ncomp {
            self.coeffs[c * len] = Complex64::new(0.0, 0.0);
        }
    }

    /// Replaces each coefficient pair by its Hermitian average so the physical field is exactly real.
    pub fn symmetrize(&mut self) {
        let len = self.grid.len();
        for c in 0..self.ncomp {
            let comp = &mut self.coeffs[c * len..(c + 1) * len];
            for i in 0..len {
                let p = self.grid.partner(i);
                if p < i {
                    continue;
                }
                let avg = 0.5 * (comp[i] + comp[p].conj());
                comp[i] = avg;
                comp[p] = avg.conj();
            }
        }
    }
}
