//! Torus grids, transforms, and the Fourier-diagonal operators.

mod field;
mod grid;
pub mod ops;
mod params;
pub mod random;
pub mod testing;
pub mod transform;

pub use field::{FieldFlags, SpectralField};
pub use grid::{wavenumber, GridSpec};
pub use ops::{
    dealias, frac_stokes_apply, helmholtz, helmholtz_inverse, leray_project, norm_dar,
    resample, semigroup_apply, stokes_power, stokes_seminorm,
};
pub use params::{Params, Regime};
pub use transform::{to_physical, to_spectral};
