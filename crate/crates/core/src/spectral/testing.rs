//! Random fields for tests and the operator battery.

use super::field::SpectralField;
use super::grid::GridSpec;
use super::ops::dealias;
use super::random::power_law_field;

/// Hermitian, zero-mean field filling every resolved mode except the Nyquist planes.
pub fn random_hermitian(grid: &GridSpec, seed: u64) -> SpectralField {
    power_law_field(grid, grid.n() / 2 - 1, 1.0, seed, false).expect("band fits")
}

/// Like [`random_hermitian`] but divergence-free.
pub fn random_solenoidal(grid: &GridSpec, seed: u64) -> SpectralField {
    power_law_field(grid, grid.n() / 2 - 1, 1.0, seed, true).expect("band fits")
}

/// Divergence-free field supported inside the 2/3-rule band.
pub fn random_dealiased(grid: &GridSpec, seed: u64) -> SpectralField {
    let f = power_law_field(grid, grid.dealias_limit(), 1.0, seed, true).expect("band fits");
    debug_assert_eq!(dealias(&f), f);
    f
}
