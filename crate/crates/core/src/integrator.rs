//! Time evolution of `∂_t u = -νA^s u + f(u,u)` with exponential integrators.
//!
//! The linear part is integrated exactly through the semigroup multiplier;
//! only the nonlinearity is approximated. With `f ≡ 0` every step is exact
//! for any `dt`.

use std::path::PathBuf;

use crate::diagnostics::{self, DiagRecord};
use crate::error::{Error, Result};
use crate::io::snapshot::{self, SnapshotMeta};
use crate::operators;
use crate::spectral::random::power_law_field;
use crate::spectral::{norm_dar, stokes_power, stokes_seminorm, GridSpec, Params, SpectralField};

/// Blow-up threshold on `‖u‖_{D(A)}` relative to the initial value.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Below this `|z|` the φ-functions switch to their Taylor series.
const PHI_SERIES_SWITCH: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    ExpEuler,
    Etd2rk,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepScheme {
    pub kind: SchemeKind,
    pub dt: f64,
    pub cfl_safety: f64,
}

impl StepScheme {
    pub fn new(kind: SchemeKind, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParam(format!("dt must be > 0, got {dt}")));
        }
        Ok(Self {
            kind,
            dt,
            cfl_safety: 0.5,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitKind {
    TaylorGreen,
    Shear,
    /// `|û(k)| ∝ |k|^{-decay_exponent}` with seeded phases on `max|k_i| ≤ band`;
    /// `band = None` fills the dealiased band of the grid.
    RandomSpectrum {
        decay_exponent: f64,
        seed: u64,
        band: Option<usize>,
    },
    FromSnapshot {
        path: PathBuf,
    },
}

/// Initial velocity. For `TaylorGreen`, `Shear` and `FromSnapshot` the
/// amplitude multiplies the field; for `RandomSpectrum` it is the target
/// `‖u₀‖_{D(A)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub kind: InitKind,
    pub amplitude: f64,
}

impl InitialData {
    pub fn new(kind: InitKind, amplitude: f64) -> Self {
        Self { kind, amplitude }
    }

    pub fn build(&self, grid: &GridSpec) -> Result<SpectralField> {
        let u = match &self.kind {
            InitKind::TaylorGreen => clean(SpectralField::from_fn(grid, |x| {
                let (sx, cx) = x[0].sin_cos();
                let (sy, cy) = x[1].sin_cos();
                let cz = if grid.dim() == 3 { x[2].cos() } else { 1.0 };
                [sx * cy * cz, -cx * sy * cz, 0.0]
            }))
            .scale(self.amplitude),
            InitKind::Shear => {
                clean(SpectralField::from_fn(grid, |x| [x[1].sin(), 0.0, 0.0])).scale(self.amplitude)
            }
            InitKind::RandomSpectrum {
                decay_exponent,
                seed,
                band,
            } => {
                let band = band.unwrap_or_else(|| grid.dealias_limit());
                let f = power_law_field(grid, band, *decay_exponent, *seed, true)?;
                let n = norm_dar(&f, 1.0);
                f.scale(self.amplitude / n)
            }
            InitKind::FromSnapshot { path } => {
                let (f, _) = snapshot::read_snapshot(path)?;
                if f.grid() != grid {
                    return Err(Error::GridMismatch);
                }
                let mut f = crate::spectral::leray_project(&f);
                f.remove_mean();
                f.scale(self.amplitude)
            }
        };
        Ok(u)
    }
}

/// Drops transform round-off so analytic fields have exact zeros off their support.
fn clean(mut f: SpectralField) -> SpectralField {
    let cut = 1e-14 * f.max_abs();
    for c in f.coeffs_mut() {
        if c.norm() <= cut {
            *c = num_complex::Complex64::new(0.0, 0.0);
        }
    }
    f.remove_mean();
    f
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub grid: GridSpec,
    pub params: Params,
    pub scheme: StepScheme,
    pub t_end: f64,
    pub galerkin_n: Option<usize>,
    /// Keep every `snapshot_every`-th state; 0 keeps only the first and last.
    pub snapshot_every: usize,
    pub initial: InitialData,
    /// Replace `f` by zero (pure semigroup evolution).
    pub linear_only: bool,
    /// Write every kept snapshot here as it is taken.
    pub snapshot_dir: Option<PathBuf>,
}

impl SimConfig {
    pub fn new(grid: GridSpec, params: Params, scheme: StepScheme, t_end: f64, initial: InitialData) -> Self {
        Self {
            grid,
            params,
            scheme,
            t_end,
            galerkin_n: None,
            snapshot_every: 1,
            initial,
            linear_only: false,
            snapshot_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParam(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if let Some(n) = self.galerkin_n {
            if n == 0 || n > self.grid.n() / 2 {
                return Err(Error::InvalidParam(format!(
                    "galerkin_N = {n} outside [1, {}]",
                    self.grid.n() / 2
                )));
            }
        }
        Ok(())
    }
}

/// Snapshots at strictly increasing times plus the per-step diagnostics.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<SpectralField>,
    pub diag: Vec<DiagRecord>,
}

impl Trajectory {
    pub fn push(&mut self, t: f64, u: SpectralField) {
        debug_assert!(self.times.last().is_none_or(|&last| t > last));
        self.times.push(t);
        self.snapshots.push(u);
    }

    pub fn last(&self) -> Option<(f64, &SpectralField)> {
        Some((*self.times.last()?, self.snapshots.last()?))
    }
}

/// Sharp spectral cutoff: zero every mode with `max|k_i| > n_cut`.
pub fn galerkin_truncate(field: &SpectralField, n_cut: usize) -> SpectralField {
    let grid = field.grid();
    let dim = grid.dim();
    let n_cut = n_cut as i32;
    field.map_modes(|i| {
        if grid.wavevector(i)[..dim].iter().all(|c| c.abs() <= n_cut) {
            1.0
        } else {
            0.0
        }
    })
}

/// `φ₁(z) = (e^z - 1)/z` and `φ₂(z) = (e^z - 1 - z)/z²`.
pub fn phi_functions(z: f64) -> (f64, f64) {
    if z.abs() < PHI_SERIES_SWITCH {
        phi_series(z)
    } else {
        phi_closed(z)
    }
}

/// `φ_j(z) = Σ z^m / (m + j)!`, six terms.
fn phi_series(z: f64) -> (f64, f64) {
    let mut phi1 = 0.0;
    let mut phi2 = 0.0;
    let mut zm = 1.0;
    let mut f1 = 1.0; // (m+1)!
    let mut f2 = 2.0; // (m+2)!
    for m in 0..6 {
        phi1 += zm / f1;
        phi2 += zm / f2;
        zm *= z;
        f1 *= (m + 2) as f64;
        f2 *= (m + 3) as f64;
    }
    (phi1, phi2)
}

fn phi_closed(z: f64) -> (f64, f64) {
    let em1 = z.exp_m1();
    (em1 / z, (em1 - z) / (z * z))
}

/// Per-mode weights of one exponential step of size `dt`.
struct ExpWeights {
    decay: Vec<f64>,
    phi1: Vec<f64>,
    phi2: Vec<f64>,
    dt: f64,
}

impl ExpWeights {
    fn new(grid: &GridSpec, params: &Params, dt: f64) -> Self {
        let len = grid.len();
        let mut decay = Vec::with_capacity(len);
        let mut phi1 = Vec::with_capacity(len);
        let mut phi2 = Vec::with_capacity(len);
        for &k2 in grid.k2() {
            let z = -params.nu * dt * stokes_power(k2, params.s);
            let (p1, p2) = phi_functions(z);
            decay.push(z.exp());
            phi1.push(p1);
            phi2.push(p2);
        }
        Self {
            decay,
            phi1,
            phi2,
            dt,
        }
    }

    /// `E·u + dt·φ₁·n`
    fn euler(&self, u: &SpectralField, n: &SpectralField) -> SpectralField {
        let len = u.grid().len();
        let mut out = u.clone();
        for (c, (o, nv)) in out.coeffs_mut().iter_mut().zip(n.coeffs()).enumerate() {
            let i = c % len;
            *o = *o * self.decay[i] + nv * (self.dt * self.phi1[i]);
        }
        out
    }

    /// `a + dt·φ₂·(n_a - n_u)`
    fn correct(&self, a: &SpectralField, n_a: &SpectralField, n_u: &SpectralField) -> SpectralField {
        let len = a.grid().len();
        let mut out = a.clone();
        for (c, o) in out.coeffs_mut().iter_mut().enumerate() {
            let i = c % len;
            *o += (n_a.coeffs()[c] - n_u.coeffs()[c]) * (self.dt * self.phi2[i]);
        }
        out
    }
}

/// Nonlinear term seen by the stepper.
trait Nonlinearity {
    fn eval(&self, u: &SpectralField) -> Result<SpectralField>;
}

struct VelocityForm<'a> {
    params: &'a Params,
    linear_only: bool,
}

impl Nonlinearity for VelocityForm<'_> {
    fn eval(&self, u: &SpectralField) -> Result<SpectralField> {
        if self.linear_only {
            Ok(SpectralField::zeros(u.grid()))
        } else {
            operators::nonlinear(u, self.params)
        }
    }
}

/// Projects every evaluation onto `|k_i| ≤ n`, so intermediate stages stay in the Galerkin space.
struct Truncated<'a> {
    inner: &'a dyn Nonlinearity,
    n_cut: usize,
}

impl Nonlinearity for Truncated<'_> {
    fn eval(&self, u: &SpectralField) -> Result<SpectralField> {
        Ok(galerkin_truncate(&self.inner.eval(u)?, self.n_cut))
    }
}

struct MomentumForm<'a> {
    params: &'a Params,
}

impl Nonlinearity for MomentumForm<'_> {
    fn eval(&self, v: &SpectralField) -> Result<SpectralField> {
        let u = operators::u_from_v(v, self.params.alpha);
        Ok(operators::momentum_transport(&u, v)?.scale(-1.0))
    }
}

fn advance(
    weights: &ExpWeights,
    kind: SchemeKind,
    u: &SpectralField,
    n_u: &SpectralField,
    nl: &dyn Nonlinearity,
) -> Result<SpectralField> {
    let a = weights.euler(u, n_u);
    match kind {
        SchemeKind::ExpEuler => Ok(a),
        SchemeKind::Etd2rk => {
            let n_a = nl.eval(&a)?;
            Ok(weights.correct(&a, &n_a, n_u))
        }
    }
}

/// One step of size `dt` from `u`.
pub fn step(u: &SpectralField, params: &Params, kind: SchemeKind, dt: f64) -> Result<SpectralField> {
    if dt < 0.0 || dt.is_nan() {
        return Err(Error::NegativeTime(dt));
    }
    if dt == 0.0 {
        return Ok(u.clone());
    }
    let nl = VelocityForm {
        params,
        linear_only: false,
    };
    let weights = ExpWeights::new(u.grid(), params, dt);
    let n_u = nl.eval(u)?;
    let next = advance(&weights, kind, u, &n_u, &nl)?;
    if !next.is_finite() {
        return Err(Error::Diverged { step: 1, t: dt });
    }
    Ok(next)
}

/// Advective CFL estimate `cfl_safety·Δx / max|u|`, capped at 1.
pub fn suggest_dt(u: &SpectralField, grid: &GridSpec, _params: &Params, cfl_safety: f64) -> f64 {
    const CAP: f64 = 1.0;
    let phys = crate::spectral::to_physical(u);
    let mut umax: f64 = 0.0;
    for p in 0..grid.len() {
        let speed = phys.iter().map(|c| c[p] * c[p]).sum::<f64>().sqrt();
        umax = umax.max(speed);
    }
    if umax == 0.0 {
        return CAP;
    }
    (cfl_safety * grid.dx() / umax).min(CAP)
}

/// Step sizes covering `[0, t_end]`: full steps and, when needed, one shorter final step.
fn step_sizes(t_end: f64, dt: f64) -> Vec<f64> {
    if t_end <= 0.0 {
        return Vec::new();
    }
    let ratio = t_end / dt;
    let whole = ratio.round();
    if (ratio - whole).abs() <= 1e-9 * ratio.max(1.0) {
        return vec![t_end / whole; whole as usize];
    }
    let full = ratio.floor() as usize;
    let mut out = vec![dt; full];
    out.push(t_end - dt * full as f64);
    out
}

fn check_state(u: &SpectralField, n0: f64, step: usize, t: f64) -> Result<()> {
    if !u.is_finite() || (n0 > 0.0 && norm_dar(u, 1.0) > DIVERGENCE_FACTOR * n0) {
        return Err(Error::Diverged { step, t });
    }
    debug_assert!(u.is_solenoidal(1e-10), "lost incompressibility at step {step}");
    debug_assert!(u.is_zero_mean(), "mean drifted at step {step}");
    debug_assert!(u.is_hermitian(1e-10), "lost Hermitian symmetry at step {step}");
    Ok(())
}

struct Recorder<'a> {
    config: &'a SimConfig,
    traj: Trajectory,
    kept: usize,
}

impl Recorder<'_> {
    fn keep(&mut self, t: f64, u: &SpectralField) -> Result<()> {
        if let Some(dir) = &self.config.snapshot_dir {
            let meta = SnapshotMeta {
                alpha: self.config.params.alpha,
                nu: self.config.params.nu,
                s: self.config.params.s,
                t,
            };
            let path = dir.join(format!("snap_{:06}.flns", self.kept));
            snapshot::write_snapshot(u, &meta, &path)?;
        }
        self.kept += 1;
        self.traj.push(t, u.clone());
        Ok(())
    }
}

fn march(
    config: &SimConfig,
    start: SpectralField,
    nl: &dyn Nonlinearity,
    to_velocity: impl Fn(&SpectralField) -> SpectralField,
) -> Result<Trajectory> {
    config.validate()?;
    let params = &config.params;
    let truncate = |f: SpectralField| match config.galerkin_n {
        Some(n) => galerkin_truncate(&f, n),
        None => f,
    };
    let projected;
    let nl: &dyn Nonlinearity = match config.galerkin_n {
        Some(n_cut) => {
            projected = Truncated { inner: nl, n_cut };
            &projected
        }
        None => nl,
    };
    let mut state = truncate(start);
    let mut rec = Recorder {
        config,
        traj: Trajectory::default(),
        kept: 0,
    };
    let u0 = to_velocity(&state);
    let n0 = norm_dar(&u0, 1.0);
    rec.keep(0.0, &u0)?;

    let sizes = step_sizes(config.t_end, config.scheme.dt);
    let mut weights = ExpWeights::new(&config.grid, params, sizes.first().copied().unwrap_or(1.0));
    let mut t = 0.0;
    for (i, &h) in sizes.iter().enumerate() {
        if h != weights.dt {
            weights = ExpWeights::new(&config.grid, params, h);
        }
        let n_state = nl.eval(&state)?;
        let u = to_velocity(&state);
        // the momentum form's nonlinearity is (1 + α²A) f, so the same map recovers f
        let f = to_velocity(&n_state);
        rec.traj
            .diag
            .push(diagnostics::record_with_rhs(&u, &f, params, t)?);
        state = truncate(advance(&weights, config.scheme.kind, &state, &n_state, nl)?);
        t = if i + 1 == sizes.len() {
            config.t_end
        } else {
            t + h
        };
        let u = to_velocity(&state);
        check_state(&u, n0, i + 1, t)?;
        let last = i + 1 == sizes.len();
        if last || (config.snapshot_every > 0 && (i + 1) % config.snapshot_every == 0) {
            rec.keep(t, &u)?;
        }
    }
    let (t_last, u_last) = rec.traj.last().map(|(t, u)| (t, u.clone())).expect("initial snapshot");
    let f_last = if config.linear_only {
        SpectralField::zeros(&config.grid)
    } else {
        operators::nonlinear(&u_last, params)?
    };
    rec.traj
        .diag
        .push(diagnostics::record_with_rhs(&u_last, &f_last, params, t_last)?);
    Ok(rec.traj)
}

/// Marches the velocity form from the configured initial data to `t_end`.
pub fn run(config: &SimConfig) -> Result<Trajectory> {
    let u0 = config.initial.build(&config.grid)?;
    run_from(config, u0)
}

/// As [`run`], starting from an explicit field.
pub fn run_from(config: &SimConfig, u0: SpectralField) -> Result<Trajectory> {
    if u0.grid() != &config.grid {
        return Err(Error::GridMismatch);
    }
    let nl = VelocityForm {
        params: &config.params,
        linear_only: config.linear_only,
    };
    march(config, u0, &nl, |u| u.clone())
}

/// Evolves the momentum `v = (1 + α²A)u` with the transport form of the
/// equations and records the corresponding velocity.
pub fn run_momentum_form(config: &SimConfig) -> Result<Trajectory> {
    let u0 = config.initial.build(&config.grid)?;
    let alpha = config.params.alpha;
    let nl = MomentumForm {
        params: &config.params,
    };
    let mut cfg = config.clone();
    cfg.linear_only = false;
    march(&cfg, operators::v_from_u(&u0, alpha), &nl, |v| operators::u_from_v(v, alpha))
}

/// Growth of a perturbation `w = ũ - u` between two runs.
#[derive(Debug, Clone)]
pub struct UniquenessReport {
    pub times: Vec<f64>,
    /// `‖w(t)‖_{D(A)} / ‖w(0)‖_{D(A)}`; all zero when the perturbation is zero.
    pub growth: Vec<f64>,
    /// `∫₀ᵗ ‖A^{1+s/2}u‖² dτ / ν` of the base run.
    pub dissipation_integral: Vec<f64>,
    /// Smallest `c` with `growth ≤ exp(c · dissipation_integral)` at every sample.
    pub envelope_rate: f64,
    pub max_growth: f64,
    pub identical: bool,
}

/// Runs the configuration and a perturbed copy whose initial difference has
/// `‖w(0)‖_{D(A)} = perturbation_scale`.
pub fn run_pair_uniqueness(config: &SimConfig, perturbation_scale: f64) -> Result<UniquenessReport> {
    if !(perturbation_scale >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "perturbation scale must be >= 0, got {perturbation_scale}"
        )));
    }
    let u0 = config.initial.build(&config.grid)?;
    let band = config.grid.dealias_limit().min(4);
    let shape = power_law_field(&config.grid, band, 2.0, 0x5eed, true)?;
    let w0 = shape.scale(perturbation_scale / norm_dar(&shape, 1.0));
    let base = run_from(config, u0.clone())?;
    let pert = run_from(config, u0.add(&w0)?)?;

    let s = config.params.s;
    let nu = config.params.nu;
    let mut integral = vec![0.0];
    for pair in base.snapshots.windows(2).zip(base.times.windows(2)) {
        let (u, t) = pair;
        let a = stokes_seminorm(&u[0], 1.0 + s / 2.0).powi(2);
        let b = stokes_seminorm(&u[1], 1.0 + s / 2.0).powi(2);
        let prev = *integral.last().unwrap();
        integral.push(prev + 0.5 * (t[1] - t[0]) * (a + b) / nu);
    }
    let w_norm0 = norm_dar(&w0, 1.0);
    let mut growth = Vec::with_capacity(base.times.len());
    let mut identical = true;
    for (a, b) in base.snapshots.iter().zip(&pert.snapshots) {
        let w = b.sub(a)?;
        identical &= w.max_abs() == 0.0;
        growth.push(if w_norm0 > 0.0 {
            norm_dar(&w, 1.0) / w_norm0
        } else {
            0.0
        });
    }
    let mut rate: f64 = 0.0;
    for (g, i) in growth.iter().zip(&integral) {
        if *g > 1.0 && *i > 0.0 {
            rate = rate.max(g.ln() / i);
        }
    }
    Ok(UniquenessReport {
        times: base.times,
        max_growth: growth.iter().cloned().fold(0.0, f64::max),
        growth,
        dissipation_integral: integral,
        envelope_rate: rate,
        identical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::testing::random_dealiased;
    use crate::spectral::{semigroup_apply, Regime};

    fn params(alpha: f64, nu: f64, s: f64) -> Params {
        Params::new(alpha, nu, s, Regime::Unrestricted, 2).unwrap()
    }

    fn config(n: usize, p: Params, kind: SchemeKind, dt: f64, t_end: f64, init: InitialData) -> SimConfig {
        SimConfig::new(GridSpec::new(2, n).unwrap(), p, StepScheme::new(kind, dt).unwrap(), t_end, init)
    }

    fn random_init(amplitude: f64) -> InitialData {
        InitialData::new(
            InitKind::RandomSpectrum {
                decay_exponent: 2.0,
                seed: 3,
                band: Some(4),
            },
            amplitude,
        )
    }

    #[test]
    fn phi_known_values() {
        assert_eq!(phi_functions(0.0), (1.0, 0.5));
        let (p1, p2) = phi_functions(-1.0);
        assert!((p1 - (1.0 - (-1f64).exp())).abs() < 1e-16);
        assert!((p2 - (-1f64).exp()).abs() < 1e-16);
        let (p1, p2) = phi_functions(-1e3);
        assert!((p1 - 1e-3).abs() < 1e-18 && (p2 - (1e3 - 1.0) / 1e6).abs() < 1e-18);
    }

    #[test]
    fn phi_branches_agree_at_switch() {
        // the closed form of φ₂ loses digits to cancellation as |z| shrinks
        for z in [-PHI_SERIES_SWITCH, PHI_SERIES_SWITCH] {
            let (s1, s2) = phi_series(z);
            let (c1, c2) = phi_closed(z);
            assert!((s1 - c1).abs() < 1e-15, "{s1} {c1}");
            assert!((s2 - c2).abs() < 1e-11, "{s2} {c2}");
        }
    }

    #[test]
    fn shear_is_exact() {
        for s in [0.5, 0.75] {
            for alpha in [0.0, 0.5, 1.0] {
                let p = params(alpha, 1.0, s);
                let cfg = config(32, p, SchemeKind::Etd2rk, 1e-2, 1.0, InitialData::new(InitKind::Shear, 1.0));
                let traj = run(&cfg).unwrap();
                let (t, u) = traj.last().unwrap();
                assert_eq!(t, 1.0);
                let exact = traj.snapshots[0].scale((-1f64).exp());
                let err = norm_dar(&u.sub(&exact).unwrap(), 1.0) / norm_dar(&exact, 1.0);
                assert!(err <= 1e-12, "s {s} alpha {alpha}: {err}");
            }
        }
    }

    #[test]
    fn zero_step_and_zero_horizon() {
        let g = GridSpec::new(2, 16).unwrap();
        let p = params(0.5, 1.0, 0.5);
        let u = random_dealiased(&g, 1);
        assert_eq!(step(&u, &p, SchemeKind::Etd2rk, 0.0).unwrap(), u);
        assert!(matches!(step(&u, &p, SchemeKind::Etd2rk, -1.0), Err(Error::NegativeTime(_))));
        let cfg = config(16, p, SchemeKind::Etd2rk, 0.1, 0.0, random_init(1.0));
        let traj = run(&cfg).unwrap();
        assert_eq!(traj.times, vec![0.0]);
        assert_eq!(traj.snapshots.len(), 1);
    }

    #[test]
    fn linear_evolution_is_exact_for_any_dt() {
        let p = params(0.5, 0.7, 0.6);
        for dt in [0.5, 0.1, 0.013] {
            let mut cfg = config(16, p, SchemeKind::Etd2rk, dt, 1.0, random_init(3.0));
            cfg.linear_only = true;
            let traj = run(&cfg).unwrap();
            let exact = semigroup_apply(&traj.snapshots[0], 1.0, &p).unwrap();
            let (_, u) = traj.last().unwrap();
            for (a, b) in u.coeffs().iter().zip(exact.coeffs()) {
                assert!((a - b).norm() <= 1e-12 * b.norm().max(1e-300) + 1e-300);
            }
        }
    }

    fn final_state(kind: SchemeKind, dt: f64) -> SpectralField {
        let cfg = config(16, params(0.5, 0.5, 0.5), kind, dt, 0.4, random_init(4.0));
        run(&cfg).unwrap().last().unwrap().1.clone()
    }

    #[test]
    fn convergence_orders() {
        let reference = final_state(SchemeKind::Etd2rk, 0.4 / 1024.0);
        for (kind, lo, hi) in [(SchemeKind::Etd2rk, 1.7, 2.3), (SchemeKind::ExpEuler, 0.8, 1.2)] {
            let errs: Vec<f64> = [0.04, 0.02, 0.01]
                .iter()
                .map(|&dt| norm_dar(&final_state(kind, dt).sub(&reference).unwrap(), 1.0))
                .collect();
            for w in errs.windows(2) {
                let order = (w[0] / w[1]).log2();
                assert!((lo..=hi).contains(&order), "{kind:?}: {errs:?}");
            }
        }
    }

    #[test]
    fn step_sizes_cover_horizon() {
        assert_eq!(step_sizes(1.0, 0.25), vec![0.25; 4]);
        assert_eq!(step_sizes(0.3, 0.1).len(), 3);
        let sizes = step_sizes(1.0, 0.3);
        assert_eq!(sizes.len(), 4);
        assert!((sizes.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(step_sizes(0.0, 0.1).is_empty());
    }

    #[test]
    fn snapshot_cadence() {
        let p = params(0.5, 1.0, 0.5);
        let mut cfg = config(16, p, SchemeKind::Etd2rk, 0.1, 1.0, random_init(1.0));
        cfg.snapshot_every = 3;
        let traj = run(&cfg).unwrap();
        assert_eq!(traj.times.len(), 5);
        assert_eq!(traj.diag.len(), 11);
        cfg.snapshot_every = 0;
        assert_eq!(run(&cfg).unwrap().times, vec![0.0, 1.0]);
    }

    #[test]
    fn snapshots_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let p = params(0.5, 1.0, 0.5);
        let mut cfg = config(16, p, SchemeKind::Etd2rk, 0.25, 0.5, random_init(1.0));
        cfg.snapshot_dir = Some(dir.path().to_path_buf());
        let traj = run(&cfg).unwrap();
        let (back, meta) = snapshot::read_snapshot(&dir.path().join("snap_000002.flns")).unwrap();
        assert_eq!(meta.t, 0.5);
        assert_eq!(back, traj.snapshots[2]);
    }

    #[test]
    fn galerkin_truncation() {
        let g = GridSpec::new(2, 16).unwrap();
        let u = crate::spectral::testing::random_hermitian(&g, 4);
        let t = galerkin_truncate(&u, 3);
        assert_eq!(galerkin_truncate(&t, 3), t);
        let a = galerkin_truncate(&crate::spectral::leray_project(&u), 3);
        let b = crate::spectral::leray_project(&t);
        assert!(a.sub(&b).unwrap().max_abs() < 1e-15);
        for i in 0..g.len() {
            if g.wavevector(i)[..2].iter().any(|c| c.abs() > 3) {
                assert_eq!(t.mode(i)[0].norm(), 0.0);
            }
        }
        let p = params(0.5, 1.0, 0.5);
        let mut cfg = config(16, p, SchemeKind::Etd2rk, 0.1, 0.3, random_init(1.0));
        cfg.galerkin_n = Some(9);
        assert!(matches!(run(&cfg), Err(Error::InvalidParam(_))));
        cfg.galerkin_n = Some(2);
        let traj = run(&cfg).unwrap();
        let last = traj.last().unwrap().1;
        assert_eq!(&galerkin_truncate(last, 2), last);
    }

    #[test]
    fn galerkin_consistency() {
        let p = params(0.5, 0.1, 0.5);
        let coarse = config(16, p, SchemeKind::Etd2rk, 1e-2, 0.2, random_init(1.0));
        let limit = coarse.grid.dealias_limit();
        let mut capped = coarse.clone();
        capped.galerkin_n = Some(limit);
        let a = run(&coarse).unwrap();
        let b = run(&capped).unwrap();
        let (ua, ub) = (a.last().unwrap().1, b.last().unwrap().1);
        assert!(ua.sub(ub).unwrap().coeff_norm() <= 1e-12 * ua.coeff_norm());

        let mut fine = config(32, p, SchemeKind::Etd2rk, 1e-2, 0.2, random_init(1.0));
        fine.galerkin_n = Some(limit);
        let c = run(&fine).unwrap();
        let uc = crate::spectral::resample(c.last().unwrap().1, &coarse.grid).unwrap();
        let err = uc.sub(ua).unwrap().coeff_norm();
        assert!(err <= 1e-12 * ua.coeff_norm(), "{err}");
    }

    #[test]
    fn e1_never_increases() {
        let p = params(0.5, 0.1, 0.5);
        let cfg = config(32, p, SchemeKind::Etd2rk, 2e-3, 0.5, random_init(2.0));
        let traj = run(&cfg).unwrap();
        assert!(traj.diag.len() > 10);
        for w in traj.diag.windows(2) {
            assert!(w[1].e1 <= w[0].e1 * (1.0 + 1e-8), "{} -> {}", w[0].e1, w[1].e1);
        }
    }

    #[test]
    fn suggested_step() {
        let g = GridSpec::new(2, 16).unwrap();
        let p = params(0.5, 1.0, 0.5);
        assert_eq!(suggest_dt(&SpectralField::zeros(&g), &g, &p, 0.5), 1.0);
        let shear = InitialData::new(InitKind::Shear, 2.0).build(&g).unwrap();
        let dt = suggest_dt(&shear, &g, &p, 0.5);
        assert!((dt - 0.5 * g.dx() / 2.0).abs() < 1e-12, "{dt}");
    }

    #[test]
    fn initial_data_builders() {
        let g = GridSpec::new(2, 16).unwrap();
        let u = random_init(0.3).build(&g).unwrap();
        assert!((norm_dar(&u, 1.0) - 0.3).abs() < 1e-15);
        assert!(u.flags().solenoidal && u.flags().hermitian && u.is_zero_mean());
        let tg = InitialData::new(InitKind::TaylorGreen, 1.0).build(&g).unwrap();
        assert_eq!(tg.coeffs().iter().filter(|c| c.norm() > 0.0).count(), 8);
        let g3 = GridSpec::new(3, 8).unwrap();
        let tg3 = InitialData::new(InitKind::TaylorGreen, 1.0).build(&g3).unwrap();
        assert!(tg3.flags().solenoidal);
        let missing = InitialData::new(
            InitKind::FromSnapshot {
                path: "/nonexistent/u.flns".into(),
            },
            1.0,
        );
        assert!(matches!(missing.build(&g), Err(Error::Io { .. })));
    }

    #[test]
    fn uniqueness_pairs() {
        let p = params(0.5, 1.0, 0.5);
        let cfg = config(16, p, SchemeKind::Etd2rk, 0.05, 0.5, random_init(0.5));
        let same = run_pair_uniqueness(&cfg, 0.0).unwrap();
        assert!(same.identical && same.max_growth == 0.0);
        let near = run_pair_uniqueness(&cfg, 1e-6).unwrap();
        assert!(!near.identical);
        assert!(near.max_growth <= 1.0 + 1e-6, "{}", near.max_growth);
        assert!(near.envelope_rate.is_finite());
    }

    #[test]
    fn huge_data_diverges() {
        let p = params(0.0, 1e-3, 0.5);
        let cfg = config(16, p, SchemeKind::ExpEuler, 0.5, 20.0, random_init(1e4));
        assert!(matches!(run(&cfg), Err(Error::Diverged { .. })));
    }
}
