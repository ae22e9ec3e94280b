use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform discretization of the 2π-periodic torus in 2 or 3 dimensions.
///
/// Coefficient and grid-point arrays are row-major with axis 0 (x)
/// outermost. Wavenumbers along each axis follow FFT order: index `i`
/// maps to `i` for `i < N/2` and to `i - N` otherwise, so every component
/// lies in `[-N/2, N/2)`.
///
/// Cloning is cheap; the wavevector tables and FFT plans are shared.
#[derive(Clone)]
pub struct GridSpec {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    n: usize,
    kvec: Vec<[i32; 3]>,
    k2: Vec<f64>,
    partner: Vec<usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::BadDim(dim));
        }
        if n % 2 != 0 {
            return Err(Error::OddN(n));
        }
        if n < 8 {
            return Err(Error::GridTooSmall(n));
        }
        let len = n.pow(dim as u32);
        let mut kvec = Vec::with_capacity(len);
        let mut k2 = Vec::with_capacity(len);
        let mut partner = Vec::with_capacity(len);
        for idx in 0..len {
            let mut k = [0i32; 3];
            let mut rem = idx;
            let mut p = 0usize;
            let mut stride = 1usize;
            for axis in (0..dim).rev() {
                let i = rem % n;
                rem /= n;
                k[axis] = wavenumber(i, n);
                p += ((n - i) % n) * stride;
                stride *= n;
            }
            k2.push(k.iter().map(|&c| (c as f64) * (c as f64)).sum());
            kvec.push(k);
            partner.push(p);
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                n,
                kvec,
                k2,
                partner,
                forward,
                inverse,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Modes per axis.
    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Number of modes (or grid points) per scalar component, `N^dim`.
    pub fn len(&self) -> usize {
        self.inner.kvec.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn period(&self) -> f64 {
        2.0 * PI
    }

    pub fn dx(&self) -> f64 {
        self.period() / self.n() as f64
    }

    /// Volume of the torus, `(2π)^dim`.
    pub fn volume(&self) -> f64 {
        self.period().powi(self.dim() as i32)
    }

    /// Integer wavevector of flat mode index `idx`; unused trailing components are 0.
    pub fn wavevector(&self, idx: usize) -> [i32; 3] {
        self.inner.kvec[idx]
    }

    pub fn wavevectors(&self) -> &[[i32; 3]] {
        &self.inner.kvec
    }

    /// `|k|^2` for every mode.
    pub fn k2(&self) -> &[f64] {
        &self.inner.k2
    }

    /// Flat index of the mode `-k` (wrapped, so the Nyquist plane maps to itself).
    pub fn partner(&self, idx: usize) -> usize {
        self.inner.partner[idx]
    }

    /// Flat index of the mode with the given wavevector, if it is on the grid.
    pub fn index_of(&self, k: &[i32]) -> Option<usize> {
        let n = self.n() as i32;
        let mut idx = 0usize;
        for &c in k.iter().take(self.dim()) {
            if c < -n / 2 || c >= n / 2 {
                return None;
            }
            idx = idx * self.n() + c.rem_euclid(n) as usize;
        }
        Some(idx)
    }

    /// True when any component of the wavevector sits on the Nyquist frequency `-N/2`.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let half = -(self.n() as i32) / 2;
        self.inner.kvec[idx][..self.dim()].iter().any(|&c| c == half)
    }

    /// Largest `|k_i|` kept by the 2/3 dealiasing rule.
    pub fn dealias_limit(&self) -> usize {
        // keep |k_i| < N/3
        let n = self.n();
        if n % 3 == 0 {
            n / 3 - 1
        } else {
            n / 3
        }
    }

    /// Coordinates of grid point `idx` in physical space.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let n = self.n();
        let dx = self.dx();
        let mut x = [0.0; 3];
        let mut rem = idx;
        for axis in (0..self.dim()).rev() {
            x[axis] = (rem % n) as f64 * dx;
            rem /= n;
        }
        x
    }

    pub(crate) fn forward_plan(&self) -> &Arc<dyn Fft<f64>> {
        &self.inner.forward
    }

    pub(crate) fn inverse_plan(&self) -> &Arc<dyn Fft<f64>> {
        &self.inner.inverse
    }
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.n() == other.n()
    }
}

impl Eq for GridSpec {}

impl fmt::Debug for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSpec")
            .field("dim", &self.dim())
            .field("n", &self.n())
            .finish()
    }
}

/// Signed wavenumber of FFT index `i` on an axis with `n` modes.
pub fn wavenumber(i: usize, n: usize) -> i32 {
    if i < n / 2 {
        i as i32
    } else {
        i as i32 - n as i32
    }
}
