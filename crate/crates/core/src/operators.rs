//! Nonlinear right-hand side of the averaged equations.
//!
//! All products are pseudo-spectral: inputs are 2/3-dealiased, multiplied
//! pointwise on the grid, transformed back and dealiased again. For inputs
//! inside the dealiased band this reproduces the exact Fourier truncation of
//! the continuum product, which is what makes the discrete energy pairing
//! cancel to rounding.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::transform::{components_to_physical, components_to_spectral};
use crate::spectral::{
    dealias, frac_stokes_apply, helmholtz, helmholtz_inverse, leray_project, GridSpec, Params,
    SpectralField,
};

/// Velocity gradient `(∇u)_{ij} = ∂_j u_i`, stored as `dim²` scalar components
/// with entry `(i, j)` at component `i * dim + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTensor {
    dim: usize,
    entries: SpectralField,
}

impl GradientTensor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &[Complex64] {
        self.entries.component(i * self.dim + j)
    }

    /// All entries as one multi-component field.
    pub fn as_field(&self) -> &SpectralField {
        &self.entries
    }
}

/// Value of `f(u₁, u₂) = -P^α[u₁·∇u₂ + U^α(u₁, u₂)]` and, optionally, the two
/// unprojected contributions.
#[derive(Debug, Clone)]
pub struct RhsEval {
    pub f: SpectralField,
    pub parts: Option<(SpectralField, SpectralField)>,
}

fn same_grid(a: &SpectralField, b: &SpectralField) -> Result<()> {
    if a.grid() != b.grid() || a.ncomp() != b.ncomp() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Spectral derivative `∂_j` of one scalar component. The Nyquist plane of
/// axis `j` is dropped so the result stays Hermitian.
fn derivative(grid: &GridSpec, coeffs: &[Complex64], axis: usize) -> Vec<Complex64> {
    let half = -(grid.n() as i32) / 2;
    coeffs
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let k = grid.wavevector(idx)[axis];
            if k == half {
                Complex64::new(0.0, 0.0)
            } else {
                c * Complex64::new(0.0, k as f64)
            }
        })
        .collect()
}

pub fn gradient(field: &SpectralField) -> GradientTensor {
    let grid = field.grid();
    let dim = grid.dim();
    let ncomp = field.ncomp();
    let mut coeffs = Vec::with_capacity(ncomp * dim * grid.len());
    for i in 0..ncomp {
        for j in 0..dim {
            coeffs.extend(derivative(grid, field.component(i), j));
        }
    }
    GradientTensor {
        dim,
        entries: SpectralField::from_coeffs(grid.clone(), ncomp * dim, coeffs)
            .expect("sizes match"),
    }
}

/// Row-wise spectral divergence `(div T)_i = ∂_j T_ij` of a `dim × dim` tensor field.
fn divergence_rows(tensor: &SpectralField) -> SpectralField {
    let grid = tensor.grid();
    let dim = grid.dim();
    let mut out = SpectralField::zeros(grid);
    for i in 0..dim {
        let mut acc = grid_zeros(grid);
        for j in 0..dim {
            let d = derivative(grid, tensor.component(i * dim + j), j);
            acc.iter_mut().zip(d).for_each(|(a, b)| *a += b);
        }
        out.component_mut(i).copy_from_slice(&acc);
    }
    out
}

fn grid_zeros(grid: &GridSpec) -> Vec<Complex64> {
    vec![Complex64::new(0.0, 0.0); grid.len()]
}

fn spectral_components(grid: &GridSpec, values: &[Vec<f64>]) -> SpectralField {
    let coeffs: Vec<Complex64> = components_to_spectral(grid, values).into_iter().flatten().collect();
    SpectralField::from_coeffs(grid.clone(), values.len(), coeffs).expect("sizes match")
}

/// Grid values of a dealiased field and of its gradient, from one batch of transforms.
struct Sampled {
    values: Vec<Vec<f64>>,
    /// Entry `(i, j)` at `i * dim + j`.
    grad: Vec<Vec<f64>>,
}

fn sample(field: &SpectralField) -> Sampled {
    let d = dealias(field);
    let g = gradient(&d);
    let mut comps: Vec<&[Complex64]> = (0..d.ncomp()).map(|c| d.component(c)).collect();
    comps.extend((0..g.entries.ncomp()).map(|c| g.entries.component(c)));
    let mut all = components_to_physical(field.grid(), &comps);
    let grad = all.split_off(d.ncomp());
    Sampled { values: all, grad }
}

/// `(a·∇)b` on the grid.
fn advect_values(dim: usize, a: &Sampled, b: &Sampled) -> Vec<Vec<f64>> {
    let len = a.values[0].len();
    let mut prod = vec![vec![0.0; len]; dim];
    for (i, out) in prod.iter_mut().enumerate() {
        for (j, aj) in a.values.iter().enumerate() {
            let gij = &b.grad[i * dim + j];
            for p in 0..len {
                out[p] += aj[p] * gij[p];
            }
        }
    }
    prod
}

/// `∇u₁∇u₂ᵀ + ∇u₁∇u₂ - ∇u₁ᵀ∇u₂` on the grid.
fn tensor_values(dim: usize, g1: &[Vec<f64>], g2: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let len = g1[0].len();
    let mut tensor = vec![vec![0.0; len]; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let t = &mut tensor[i * dim + j];
            for k in 0..dim {
                let (a, b) = (&g1[i * dim + k], &g2[j * dim + k]);
                let (c, d) = (&g1[i * dim + k], &g2[k * dim + j]);
                let (e, f) = (&g1[k * dim + i], &g2[k * dim + j]);
                for p in 0..len {
                    t[p] += a[p] * b[p] + c[p] * d[p] - e[p] * f[p];
                }
            }
        }
    }
    tensor
}

/// `α²(1-α²Δ)^{-1} div T` from a dealiased spectral tensor.
fn u_alpha_from_tensor(tensor: &SpectralField, alpha: f64) -> SpectralField {
    helmholtz_inverse(&divergence_rows(tensor), alpha).scale(alpha * alpha)
}

/// `(u₁·∇)u₂`, dealiased.
pub fn advect(u1: &SpectralField, u2: &SpectralField) -> Result<SpectralField> {
    same_grid(u1, u2)?;
    let grid = u1.grid();
    let prod = advect_values(grid.dim(), &sample(u1), &sample(u2));
    Ok(dealias(&spectral_components(grid, &prod)))
}

/// `U^α(u₁,u₂) = α²(1-α²Δ)^{-1} div[∇u₁∇u₂ᵀ + ∇u₁∇u₂ - ∇u₁ᵀ∇u₂]` with matrix
/// products in the `(∇u)_{ij} = ∂_j u_i` convention.
pub fn u_alpha(u1: &SpectralField, u2: &SpectralField, alpha: f64) -> Result<SpectralField> {
    same_grid(u1, u2)?;
    let grid = u1.grid();
    if alpha == 0.0 {
        return Ok(SpectralField::zeros(grid));
    }
    let tensor = tensor_values(grid.dim(), &sample(u1).grad, &sample(u2).grad);
    Ok(u_alpha_from_tensor(&dealias(&spectral_components(grid, &tensor)), alpha))
}

/// Stokes projector `P^α`. On the torus `(1-α²Δ)` is a scalar multiplier that
/// commutes with the Leray projection, so `P^α` is the Leray projection itself.
pub fn stokes_project_alpha(w: &SpectralField, _alpha: f64) -> SpectralField {
    leray_project(w)
}

/// `f(u₁,u₂) = -P^α[u₁·∇u₂ + U^α(u₁,u₂)]`; solenoidal, zero-mean and Hermitian.
pub fn rhs_f(u1: &SpectralField, u2: &SpectralField, params: &Params) -> Result<RhsEval> {
    same_grid(u1, u2)?;
    let grid = u1.grid();
    let dim = grid.dim();
    let s1 = sample(u1);
    let s2_owned;
    let s2 = if std::ptr::eq(u1, u2) {
        &s1
    } else {
        s2_owned = sample(u2);
        &s2_owned
    };
    let mut values = advect_values(dim, &s1, s2);
    if params.alpha != 0.0 {
        values.extend(tensor_values(dim, &s1.grad, &s2.grad));
    }
    let mut all = dealias(&spectral_components(grid, &values)).into_coeffs();
    let split = dim * grid.len();
    let adv = SpectralField::from_coeffs(grid.clone(), dim, all.drain(..split).collect())?;
    let ua = if params.alpha != 0.0 {
        let tensor = SpectralField::from_coeffs(grid.clone(), dim * dim, all)?;
        u_alpha_from_tensor(&tensor, params.alpha)
    } else {
        SpectralField::zeros(grid)
    };
    let w = adv.add(&ua)?;
    let mut f = stokes_project_alpha(&w, params.alpha).scale(-1.0);
    f.remove_mean();
    // round-off of a projected gradient has no divergence scale of its own
    #[cfg(debug_assertions)]
    {
        let bound = 1e-10 * w.coeff_norm();
        debug_assert!((0..grid.len()).all(|i| f.divergence_at(i).norm() <= bound));
    }
    debug_assert!(f.is_hermitian(1e-10));
    Ok(RhsEval {
        f,
        parts: Some((adv, ua)),
    })
}

/// `f(u, u)` without the diagnostic parts.
pub fn nonlinear(u: &SpectralField, params: &Params) -> Result<SpectralField> {
    Ok(rhs_f(u, u, params)?.f)
}

/// `v = (1 + α²A)u`.
pub fn v_from_u(u: &SpectralField, alpha: f64) -> SpectralField {
    helmholtz(u, alpha)
}

pub fn u_from_v(v: &SpectralField, alpha: f64) -> SpectralField {
    helmholtz_inverse(v, alpha)
}

/// Projected transport of the momentum form, `P[u·∇v + (∇u)ᵀv]`, dealiased and zero-mean.
pub fn momentum_transport(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    same_grid(u, v)?;
    let grid = u.grid();
    let dim = grid.dim();
    let (su, sv) = (sample(u), sample(v));
    let mut prod = advect_values(dim, &su, &sv);
    for (i, out) in prod.iter_mut().enumerate() {
        for j in 0..dim {
            let (gu_ji, vj) = (&su.grad[j * dim + i], &sv.values[j]);
            for p in 0..grid.len() {
                out[p] += gu_ji[p] * vj[p];
            }
        }
    }
    let mut transport = leray_project(&dealias(&spectral_components(grid, &prod)));
    transport.remove_mean();
    Ok(transport)
}

/// Right-hand side of the momentum form
/// `∂_t v = -νA^s v - P[u·∇v + (∇u)ᵀv]`.
pub fn rhs_v(u: &SpectralField, v: &SpectralField, params: &Params) -> Result<SpectralField> {
    same_grid(u, v)?;
    let expected = v_from_u(u, params.alpha);
    let mismatch = v.sub(&expected)?.coeff_norm() / expected.coeff_norm().max(f64::MIN_POSITIVE);
    if mismatch > 1e-8 {
        return Err(Error::InconsistentPair(mismatch));
    }
    let transport = momentum_transport(u, v)?;
    let dissipation = frac_stokes_apply(v, params.s)?.scale(params.nu);
    Ok(dissipation.add(&transport)?.scale(-1.0))
}

/// The energy pairing `⟨(1 + α²A)u, f(u,u)⟩`, zero for the continuum equations.
pub fn energy_pairing(u: &SpectralField, f: &SpectralField, alpha: f64) -> Result<f64> {
    v_from_u(u, alpha).inner(f)
}
