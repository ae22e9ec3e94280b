//! Seeded random fields with a prescribed power-law spectrum.
//!
//! Modes are drawn in a canonical order over the box `|k_i| ≤ band`, which
//! does not depend on the grid, so the same seed yields the same continuum
//! field on every grid that resolves the band.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::field::SpectralField;
use super::grid::GridSpec;
use crate::error::{Error, Result};

/// Hermitian, zero-mean field with `|û(k)| = |k|^{-decay}` for `0 < max|k_i| ≤ band`.
/// With `solenoidal` set, each coefficient is orthogonal to its wavevector.
pub fn power_law_field(
    grid: &GridSpec,
    band: usize,
    decay: f64,
    seed: u64,
    solenoidal: bool,
) -> Result<SpectralField> {
    if band == 0 || band >= grid.n() / 2 {
        return Err(Error::InvalidParam(format!(
            "band {band} must lie in [1, {}] for N = {}",
            grid.n() / 2 - 1,
            grid.n()
        )));
    }
    let dim = grid.dim();
    let b = band as i32;
    let width = 2 * band + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SpectralField::zeros(grid);
    for flat in 0..width.pow(dim as u32) {
        let mut k = [0i32; 3];
        let mut rem = flat;
        for axis in (0..dim).rev() {
            k[axis] = (rem % width) as i32 - b;
            rem /= width;
        }
        let leading = k[..dim].iter().find(|&&c| c != 0);
        if leading.is_none_or(|&c| c < 0) {
            continue;
        }
        let mut v = [Complex64::new(0.0, 0.0); 3];
        for slot in v.iter_mut().take(dim) {
            *slot = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let k2: f64 = k.iter().map(|&c| (c * c) as f64).sum();
        if solenoidal {
            let kv: Complex64 = (0..dim).map(|a| v[a] * k[a] as f64).sum();
            for a in 0..dim {
                v[a] -= kv * (k[a] as f64 / k2);
            }
        }
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let amp = (-0.5 * decay * k2.ln()).exp() / norm;
        let idx = grid.index_of(&k[..dim]).expect("band fits the grid");
        let values: Vec<Complex64> = v.iter().map(|c| c * amp).collect();
        let conj: Vec<Complex64> = values.iter().map(|c| c.conj()).collect();
        out.set_mode(idx, &values);
        out.set_mode(grid.partner(idx), &conj);
    }
    Ok(out)
}
