//! Pseudo-spectral solver for the viscous Camassa-Holm (LANS-α) equations
//! with fractional dissipation `νA^s` on the periodic torus, together with
//! the checks that turn the model's energy identity, a priori bounds and
//! smoothing estimates into measured quantities.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod io;
pub mod mild;
pub mod operators;
pub mod spectral;

pub use error::{Error, Result};
