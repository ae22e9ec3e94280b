//! Multi-dimensional FFTs on the torus grid.
//!
//! Spectral coefficients are Fourier-series coefficients:
//! `u(x) = Σ_k û(k) e^{i k·x}`. The inverse transform is the unnormalized
//! DFT sum and the forward transform divides by `N^dim`. Norms elsewhere
//! carry the `(2π)^{dim/2}` factor so they report physical L² values.

use num_complex::Complex64;

use super::field::SpectralField;
use super::grid::GridSpec;
use crate::error::{Error, Result};

fn transform_axes(grid: &GridSpec, data: &mut [Complex64], inverse: bool) {
    let n = grid.n();
    let dim = grid.dim();
    let plan = if inverse {
        grid.inverse_plan()
    } else {
        grid.forward_plan()
    };
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    // last axis is contiguous: one batched call
    plan.process_with_scratch(data, &mut scratch);

    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..dim - 1 {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[base + j * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}

/// Physical values of one scalar component. The imaginary part is dropped;
/// callers are expected to pass Hermitian coefficients.
pub fn scalar_to_physical(grid: &GridSpec, coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    transform_axes(grid, &mut buf, true);
    buf.into_iter().map(|c| c.re).collect()
}

pub fn scalar_to_spectral(grid: &GridSpec, values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_axes(grid, &mut buf, false);
    let scale = 1.0 / grid.len() as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Physical values of several Hermitian components, two per complex
/// transform: `IFFT(a + ib)` carries `a` in its real part and `b` in its imaginary part.
pub fn components_to_physical(grid: &GridSpec, comps: &[&[Complex64]]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(comps.len());
    for pair in comps.chunks(2) {
        match pair {
            [a, b] => {
                let mut buf: Vec<Complex64> = a
                    .iter()
                    .zip(b.iter())
                    .map(|(x, y)| Complex64::new(x.re - y.im, x.im + y.re))
                    .collect();
                transform_axes(grid, &mut buf, true);
                out.push(buf.iter().map(|c| c.re).collect());
                out.push(buf.iter().map(|c| c.im).collect());
            }
            [a] => out.push(scalar_to_physical(grid, a)),
            _ => unreachable!(),
        }
    }
    out
}

/// Coefficients of several real components, two per complex transform,
/// separated through `X(k) = (Z(k) + conj Z(-k))/2`. The results are exactly Hermitian.
pub fn components_to_spectral(grid: &GridSpec, values: &[Vec<f64>]) -> Vec<Vec<Complex64>> {
    let len = grid.len();
    let scale = 1.0 / len as f64;
    let mut out = Vec::with_capacity(values.len());
    for pair in values.chunks(2) {
        let mut buf: Vec<Complex64> = match pair {
            [x, y] => x.iter().zip(y).map(|(&a, &b)| Complex64::new(a, b)).collect(),
            [x] => x.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
            _ => unreachable!(),
        };
        transform_axes(grid, &mut buf, false);
        let mut first = Vec::with_capacity(len);
        let mut second = Vec::with_capacity(len);
        for i in 0..len {
            let z = buf[i] * scale;
            let zc = buf[grid.partner(i)].conj() * scale;
            first.push((z + zc) * 0.5);
            let d = (z - zc) * 0.5;
            second.push(Complex64::new(d.im, -d.re));
        }
        out.push(first);
        if pair.len() == 2 {
            out.push(second);
        }
    }
    out
}

/// Grid-point values of every component, components outermost.
pub fn to_physical(field: &SpectralField) -> Vec<Vec<f64>> {
    debug_assert!(field.is_hermitian(1e-10), "to_physical on a non-Hermitian field");
    (0..field.ncomp())
        .map(|c| scalar_to_physical(field.grid(), field.component(c)))
        .collect()
}

pub fn to_spectral(values: &[Vec<f64>], grid: &GridSpec) -> Result<SpectralField> {
    let mut coeffs = Vec::with_capacity(values.len() * grid.len());
    for comp in values {
        if comp.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                actual: comp.len(),
            });
        }
        coeffs.extend(scalar_to_spectral(grid, comp));
    }
    SpectralField::from_coeffs(grid.clone(), values.len(), coeffs)
}

/// Physical L² norm over `[0, 2π]^dim` by the rectangle rule, exact for band-limited fields.
pub fn physical_l2_norm(grid: &GridSpec, values: &[Vec<f64>]) -> f64 {
    let cell = grid.dx().powi(grid.dim() as i32);
    let sum: f64 = values.iter().flatten().map(|v| v * v).sum();
    (sum * cell).sqrt()
}
