//! Operators that are diagonal in Fourier space.

use num_complex::Complex64;

use super::field::SpectralField;
use super::grid::GridSpec;
use super::params::Params;
use crate::error::{Error, Result};

/// `|k|^{2r}` given `|k|^2`, with the mean mode sent to zero.
#[inline]
pub fn stokes_power(k2: f64, r: f64) -> f64 {
    if k2 == 0.0 {
        0.0
    } else {
        (r * k2.ln()).exp()
    }
}

/// Leray projection: removes the component of `û(k)` parallel to `k`. The mean mode is left alone.
pub fn leray_project(field: &SpectralField) -> SpectralField {
    let grid = field.grid();
    let dim = grid.dim();
    let len = grid.len();
    let mut out = field.clone();
    let coeffs = out.coeffs_mut();
    for idx in 1..len {
        let k = grid.wavevector(idx);
        let k2 = grid.k2()[idx];
        let kdotu: Complex64 = (0..dim).map(|a| coeffs[a * len + idx] * k[a] as f64).sum();
        let q = kdotu / k2;
        for a in 0..dim {
            coeffs[a * len + idx] -= q * k[a] as f64;
        }
    }
    out
}

/// Fractional Stokes power `A^r` as the multiplier `|k|^{2r}`.
pub fn frac_stokes_apply(field: &SpectralField, r: f64) -> Result<SpectralField> {
    if r < 0.0 && !field.is_zero_mean() {
        return Err(Error::NegativePowerOnMean(r));
    }
    let k2 = field.grid().k2();
    Ok(field.map_modes(|i| stokes_power(k2[i], r)))
}

/// `(1 - α²Δ)`, the multiplier `1 + α²|k|²`.
pub fn helmholtz(field: &SpectralField, alpha: f64) -> SpectralField {
    let k2 = field.grid().k2();
    let a2 = alpha * alpha;
    field.map_modes(|i| 1.0 + a2 * k2[i])
}

/// `(1 - α²Δ)^{-1}`.
pub fn helmholtz_inverse(field: &SpectralField, alpha: f64) -> SpectralField {
    let k2 = field.grid().k2();
    let a2 = alpha * alpha;
    field.map_modes(|i| 1.0 / (1.0 + a2 * k2[i]))
}

/// `e^{-tνA^s}`.
pub fn semigroup_apply(field: &SpectralField, t: f64, params: &Params) -> Result<SpectralField> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    let k2 = field.grid().k2();
    let rate = params.nu * t;
    Ok(field.map_modes(|i| (-rate * stokes_power(k2[i], params.s)).exp()))
}

/// `‖A^r f‖_{L²}`.
pub fn stokes_seminorm(field: &SpectralField, r: f64) -> f64 {
    let grid = field.grid();
    let len = grid.len();
    let k2 = grid.k2();
    let mut sum = 0.0;
    for c in 0..field.ncomp() {
        let comp = field.component(c);
        for i in 1..len {
            let w = stokes_power(k2[i], r);
            sum += w * w * comp[i].norm_sqr();
        }
    }
    (grid.volume() * sum).sqrt()
}

/// `‖f‖_{D(A^r)} = (‖A^r f‖² + ‖f‖²·1_{r>0})^{1/2}`; plain L² norm at `r = 0`.
pub fn norm_dar(field: &SpectralField, r: f64) -> f64 {
    let l2 = field.l2_norm();
    if r > 0.0 {
        stokes_seminorm(field, r).hypot(l2)
    } else {
        l2
    }
}

/// 2/3 rule: zero every mode with some `|k_i| ≥ N/3`.
pub fn dealias(field: &SpectralField) -> SpectralField {
    let grid = field.grid();
    let limit = grid.dealias_limit() as i32;
    let dim = grid.dim();
    field.map_modes(|i| {
        let k = grid.wavevector(i);
        if k[..dim].iter().all(|c| c.abs() <= limit) {
            1.0
        } else {
            0.0
        }
    })
}

/// Copies every mode representable on both grids onto `grid`; Nyquist modes
/// of either grid are dropped, everything else is zero.
pub fn resample(field: &SpectralField, grid: &GridSpec) -> Result<SpectralField> {
    let src = field.grid();
    if src.dim() != grid.dim() {
        return Err(Error::GridMismatch);
    }
    let mut out = SpectralField::zeros_with(grid, field.ncomp());
    for idx in 0..src.len() {
        if src.is_nyquist(idx) {
            continue;
        }
        let k = src.wavevector(idx);
        if let Some(j) = grid.index_of(&k[..grid.dim()]) {
            if !grid.is_nyquist(j) {
                for c in 0..field.ncomp() {
                    out.component_mut(c)[j] = field.component(c)[idx];
                }
            }
        }
    }
    Ok(out)
}
