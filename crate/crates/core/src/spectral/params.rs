use crate::error::{Error, Result};

/// Which well-posedness hypothesis a parameter set satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `s ∈ [dim/4, 1)`: global solutions with the a priori bound.
    GlobalRange,
    /// `s ∈ [1/2, 1)`: local solutions only.
    LocalRange,
    /// Any `s ∈ (0, 1)`; operator checks only.
    Unrestricted,
}

impl Regime {
    /// Strongest regime the pair `(dim, s)` satisfies.
    pub fn infer(dim: usize, s: f64) -> Self {
        if s >= dim as f64 / 4.0 && s < 1.0 {
            Regime::GlobalRange
        } else if (0.5..1.0).contains(&s) {
            Regime::LocalRange
        } else {
            Regime::Unrestricted
        }
    }

    pub fn admits(self, dim: usize, s: f64) -> bool {
        if !(s > 0.0 && s < 1.0) {
            return false;
        }
        match self {
            Regime::GlobalRange => s >= dim as f64 / 4.0,
            Regime::LocalRange => s >= 0.5,
            Regime::Unrestricted => true,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::GlobalRange => "GlobalRange",
            Regime::LocalRange => "LocalRange",
            Regime::Unrestricted => "Unrestricted",
        }
    }
}

/// Model constants: averaging scale `alpha`, viscosity `nu`, fractional order `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub alpha: f64,
    pub nu: f64,
    pub s: f64,
    pub regime: Regime,
}

impl Params {
    pub fn new(alpha: f64, nu: f64, s: f64, regime: Regime, dim: usize) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParam(format!("alpha must be >= 0, got {alpha}")));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParam(format!("nu must be > 0, got {nu}")));
        }
        if !regime.admits(dim, s) {
            return Err(Error::WrongRegime(format!(
                "s = {s} does not satisfy {} in dimension {dim}",
                regime.name()
            )));
        }
        Ok(Self {
            alpha,
            nu,
            s,
            regime,
        })
    }

    /// Parameters tagged with the strongest regime they satisfy.
    pub fn inferred(alpha: f64, nu: f64, s: f64, dim: usize) -> Result<Self> {
        Self::new(alpha, nu, s, Regime::infer(dim, s), dim)
    }
}
