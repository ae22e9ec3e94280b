//! Mild solutions by Picard iteration of the Duhamel formula
//! `u(t) = e^{-tνA^s}u₀ + ∫₀ᵗ e^{-(t-τ)νA^s} f(u,u)(τ) dτ`,
//! independent of the time stepper, plus the weighted Hölder-class checks
//! used in the critical case `(n, s) = (2, 1/2)`.

use crate::error::{Error, Result};
use crate::integrator::{self, SimConfig, Trajectory};
use crate::operators;
use crate::spectral::{frac_stokes_apply, norm_dar, semigroup_apply, Params, SpectralField};

/// Default number of mesh intervals on `[0, T]`.
pub const DEFAULT_MESH: usize = 64;

/// Number of logarithmically spaced base times in the Hölder lattice.
pub const LATTICE_TIMES: usize = 16;

/// Parameters `(R, β, T)` of the class `B^β_{R,T}` and the slack allowed on membership.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderClass {
    pub r: f64,
    pub beta: f64,
    pub t_final: f64,
    pub tol: f64,
}

impl HolderClass {
    pub fn new(r: f64, beta: f64, t_final: f64, tol: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidParam(format!("R must be > 0, got {r}")));
        }
        if !(beta > 0.0 && beta < 0.5) {
            return Err(Error::InvalidParam(format!("beta must lie in (0, 1/2), got {beta}")));
        }
        if !(t_final > 0.0 && t_final <= 1.0) {
            return Err(Error::InvalidParam(format!("T must lie in (0, 1], got {t_final}")));
        }
        if !(tol >= 1.0) {
            return Err(Error::InvalidParam(format!("tol must be >= 1, got {tol}")));
        }
        Ok(Self {
            r,
            beta,
            t_final,
            tol,
        })
    }
}

/// Increment history of a Picard run.
#[derive(Debug, Clone, Default)]
pub struct PicardState {
    /// Every iterate sampled on the mesh, starting with `e^{-tνA^s}u₀`.
    pub iterates: Vec<Vec<SpectralField>>,
    /// `‖u^{(j)} - u^{(j-1)}‖` in `L^∞_T(D(A))`, one entry per completed iterate `j ≥ 1`.
    pub increments_linf: Vec<f64>,
    /// The same increments in `L²_T(D(A^{1+s/2}))`.
    pub increments_l2: Vec<f64>,
    pub converged: bool,
}

impl PicardState {
    /// Successive increment ratios `Δ_{j+1} / Δ_j` in `L^∞_T(D(A))`.
    pub fn ratios(&self) -> Vec<f64> {
        self.increments_linf
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
            .collect()
    }
}

fn uniform_mesh(t_final: f64, intervals: usize) -> Vec<f64> {
    (0..=intervals)
        .map(|i| t_final * i as f64 / intervals as f64)
        .collect()
}

/// Trapezoid quadrature of `∫₀^{t_eval} e^{-(t_eval-τ)νA^s} f(τ) dτ` with the
/// semigroup applied exactly at each node. `t_eval` must be a mesh node.
pub fn duhamel_integral(
    f_samples: &[SpectralField],
    t_mesh: &[f64],
    t_eval: f64,
    params: &Params,
) -> Result<SpectralField> {
    if t_mesh.is_empty() || f_samples.is_empty() {
        return Err(Error::EmptyMesh);
    }
    if f_samples.len() != t_mesh.len() {
        return Err(Error::ShapeMismatch {
            expected: t_mesh.len(),
            actual: f_samples.len(),
        });
    }
    let span = (t_mesh[t_mesh.len() - 1] - t_mesh[0]).abs().max(1.0);
    let i = t_mesh
        .iter()
        .position(|&t| (t - t_eval).abs() <= 1e-12 * span)
        .ok_or(Error::NotAMeshNode(t_eval))?;
    let mut acc = SpectralField::zeros(f_samples[0].grid());
    for m in 0..i {
        let h = t_mesh[m + 1] - t_mesh[m];
        let left = semigroup_apply(&f_samples[m], t_mesh[i] - t_mesh[m], params)?;
        let right = semigroup_apply(&f_samples[m + 1], t_mesh[i] - t_mesh[m + 1], params)?;
        acc = acc.axpy(0.5 * h, &left)?.axpy(0.5 * h, &right)?;
    }
    Ok(acc)
}

/// The same quadrature at every node at once, by the recursion
/// `I_{i+1} = S(h)I_i + (h/2)(S(h)f_i + f_{i+1})`.
pub fn duhamel_series(f_samples: &[SpectralField], t_mesh: &[f64], params: &Params) -> Result<Vec<SpectralField>> {
    if t_mesh.is_empty() || f_samples.is_empty() {
        return Err(Error::EmptyMesh);
    }
    if f_samples.len() != t_mesh.len() {
        return Err(Error::ShapeMismatch {
            expected: t_mesh.len(),
            actual: f_samples.len(),
        });
    }
    let mut out = Vec::with_capacity(t_mesh.len());
    out.push(SpectralField::zeros(f_samples[0].grid()));
    for m in 0..t_mesh.len() - 1 {
        let h = t_mesh[m + 1] - t_mesh[m];
        let carried = semigroup_apply(&out[m].axpy(0.5 * h, &f_samples[m])?, h, params)?;
        out.push(carried.axpy(0.5 * h, &f_samples[m + 1])?);
    }
    Ok(out)
}

fn sup_increment(a: &[SpectralField], b: &[SpectralField]) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        sup = sup.max(norm_dar(&x.sub(y)?, 1.0));
    }
    Ok(sup)
}

fn l2_increment(a: &[SpectralField], b: &[SpectralField], mesh: &[f64], s: f64) -> Result<f64> {
    let sq: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x.sub(y).map(|d| norm_dar(&d, 1.0 + s / 2.0).powi(2)))
        .collect::<Result<_>>()?;
    let integral: f64 = mesh
        .windows(2)
        .zip(sq.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum();
    Ok(integral.sqrt())
}

/// Picard iteration `u^{(j+1)} = e^{-tνA^s}u₀ + ∫₀ᵗ e^{-(t-τ)νA^s} f(u^{(j)},u^{(j)}) dτ`
/// on a uniform mesh of `mesh_size` intervals over `[0, T]`.
///
/// Stops once the `L^∞_T(D(A))` increment drops below `tol` times the size of
/// the iterate, or after `max_iter` iterates. Three consecutive non-decreasing
/// increments abort with [`Error::NoContraction`].
pub fn picard_solve(
    u0: &SpectralField,
    params: &Params,
    holder: &HolderClass,
    mesh_size: usize,
    max_iter: usize,
    tol: f64,
) -> Result<(Trajectory, PicardState)> {
    if mesh_size == 0 {
        return Err(Error::EmptyMesh);
    }
    let mesh = uniform_mesh(holder.t_final, mesh_size);
    let free: Vec<SpectralField> = mesh
        .iter()
        .map(|&t| semigroup_apply(u0, t, params))
        .collect::<Result<_>>()?;
    let mut state = PicardState {
        iterates: vec![free.clone()],
        ..Default::default()
    };
    let mut rising = 0;
    for j in 1..=max_iter {
        let prev = state.iterates.last().expect("seeded");
        let f: Vec<SpectralField> = prev
            .iter()
            .map(|u| operators::nonlinear(u, params))
            .collect::<Result<_>>()?;
        let duhamel = duhamel_series(&f, &mesh, params)?;
        let next: Vec<SpectralField> = free
            .iter()
            .zip(&duhamel)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        let inc = sup_increment(&next, prev)?;
        let inc_l2 = l2_increment(&next, prev, &mesh, params.s)?;
        let size = next.iter().map(|u| norm_dar(u, 1.0)).fold(0.0, f64::max);
        if let Some(&last) = state.increments_linf.last() {
            rising = if inc >= last { rising + 1 } else { 0 };
        }
        state.increments_linf.push(inc);
        state.increments_l2.push(inc_l2);
        state.iterates.push(next);
        if inc == 0.0 || inc <= tol * size {
            state.converged = true;
            break;
        }
        if !inc.is_finite() || rising >= 3 {
            return Err(Error::NoContraction { iterate: j });
        }
    }
    let mut traj = Trajectory::default();
    for (t, u) in mesh.iter().zip(state.iterates.last().expect("seeded")) {
        traj.push(*t, u.clone());
    }
    Ok((traj, state))
}

/// Sup of the four `B^β_{R,T}` quotients over the sampled lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderReport {
    /// Raw suprema with `R = 1`:
    /// `‖w(t)‖_{D(A)}`, `t^{1/2}‖A^{s/2}w(t)‖_{D(A)}`,
    /// `h^{-β}t^β‖w(t+h)-w(t)‖_{D(A)}`, `h^{-β}t^{β+1/2}‖A^{s/2}(w(t+h)-w(t))‖_{D(A)}`.
    pub sup: [f64; 4],
    /// `sup / R` for the class under test.
    pub normalized: [f64; 4],
    /// Smallest `R` for which every sampled quotient holds.
    pub minimal_r: f64,
    /// `minimal_r / ‖w(0)‖_{D(A)}` (0 for zero data).
    pub minimal_c: f64,
    pub member: bool,
    pub pairs: usize,
}

impl HolderReport {
    pub fn all_finite(&self) -> bool {
        self.sup.iter().all(|v| v.is_finite())
    }
}

/// Base times `t` and offsets `h` of the sampling lattice: 16 log-spaced
/// times in `[t_min, T]`, `h ∈ {t/16, t/8, t/4, t/2}` plus `h = t, 2t, 4t, …`
/// and `h = T - t`, keeping only `t + h ≤ T`.
pub fn holder_lattice(t_min: f64, t_final: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 0..LATTICE_TIMES {
        let t = t_min * (t_final / t_min).powf(i as f64 / (LATTICE_TIMES - 1) as f64);
        let room = t_final - t;
        let mut hs: Vec<f64> = [16.0, 8.0, 4.0, 2.0].iter().map(|d| t / d).collect();
        let mut h = t;
        while h <= room * (1.0 + 1e-12) {
            hs.push(h);
            h *= 2.0;
        }
        if room > 0.0 {
            hs.push(room);
        }
        out.extend(hs.into_iter().filter(|&h| h > 0.0 && h <= room * (1.0 + 1e-12)).map(|h| (t, h)));
    }
    out
}

fn nearest(times: &[f64], t: f64) -> usize {
    let i = times.partition_point(|&x| x < t);
    if i == 0 {
        return 0;
    }
    if i == times.len() {
        return times.len() - 1;
    }
    if (times[i] - t).abs() < (t - times[i - 1]).abs() {
        i
    } else {
        i - 1
    }
}

fn smoothing_norm(w: &SpectralField, s: f64) -> f64 {
    norm_dar(&frac_stokes_apply(w, s / 2.0).expect("nonnegative power"), 1.0)
}

/// Measures the `B^β_{R,T}` quotients of a sampled trajectory. Lattice points
/// snap to the nearest samples; pairs that collapse onto one sample are skipped.
pub fn holder_membership(traj: &Trajectory, holder: &HolderClass, s: f64) -> HolderReport {
    let times = &traj.times;
    let beta = holder.beta;
    let mut sup = [0.0f64; 4];
    for (t, w) in times.iter().zip(&traj.snapshots) {
        if *t > holder.t_final * (1.0 + 1e-12) {
            break;
        }
        sup[0] = sup[0].max(norm_dar(w, 1.0));
        if *t > 0.0 {
            sup[1] = sup[1].max(t.sqrt() * smoothing_norm(w, s));
        }
    }
    let t_min = times.iter().copied().find(|&t| t > 0.0);
    let mut pairs = 0;
    if let Some(t_min) = t_min {
        let t_final = holder.t_final.min(*times.last().expect("nonempty"));
        let mut seen = std::collections::BTreeSet::new();
        for (t, h) in holder_lattice(t_min, t_final) {
            let i = nearest(times, t);
            let j = nearest(times, t + h);
            if i == 0 || j <= i || !seen.insert((i, j)) {
                continue;
            }
            pairs += 1;
            let (ti, hij) = (times[i], times[j] - times[i]);
            let diff = traj.snapshots[j]
                .sub(&traj.snapshots[i])
                .expect("one trajectory, one grid");
            let weight = (ti / hij).powf(beta);
            sup[2] = sup[2].max(weight * norm_dar(&diff, 1.0));
            sup[3] = sup[3].max(weight * ti.sqrt() * smoothing_norm(&diff, s));
        }
    }
    let normalized = sup.map(|v| v / holder.r);
    let minimal_r = sup.iter().cloned().fold(0.0, f64::max);
    let u0 = traj.snapshots.first().map(|u| norm_dar(u, 1.0)).unwrap_or(0.0);
    HolderReport {
        sup,
        normalized,
        minimal_r,
        minimal_c: if u0 > 0.0 { minimal_r / u0 } else { 0.0 },
        member: normalized.iter().all(|&q| q <= holder.tol),
        pairs,
    }
}

/// Checks that `w(t) = e^{-tνA^s}u₀` lies in the class, sampling the
/// lattice with base times down to `T / DEFAULT_MESH`.
pub fn semigroup_class_check(u0: &SpectralField, params: &Params, holder: &HolderClass) -> Result<HolderReport> {
    semigroup_class_check_on_mesh(u0, params, holder, DEFAULT_MESH)
}

/// As [`semigroup_class_check`] with the smallest base time `T / mesh_size`.
/// The semigroup is evaluated exactly at every lattice time.
pub fn semigroup_class_check_on_mesh(
    u0: &SpectralField,
    params: &Params,
    holder: &HolderClass,
    mesh_size: usize,
) -> Result<HolderReport> {
    if mesh_size == 0 {
        return Err(Error::EmptyMesh);
    }
    let t_final = holder.t_final;
    let mut times: Vec<f64> = uniform_mesh(t_final, mesh_size);
    for (t, h) in holder_lattice(t_final / mesh_size as f64, t_final) {
        times.push(t);
        times.push((t + h).min(t_final));
    }
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * t_final);
    let mut traj = Trajectory::default();
    for t in times {
        traj.push(t, semigroup_apply(u0, t, params)?);
    }
    Ok(holder_membership(&traj, holder, params.s))
}

/// `sup_t t^{1/2}‖f(w,w)(t)‖_{D(A^{1-s/2})} / R²` over the samples of a trajectory.
pub fn critical_nonlinear_quotient(traj: &Trajectory, params: &Params, r: f64) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for (t, w) in traj.times.iter().zip(&traj.snapshots) {
        if *t <= 0.0 {
            continue;
        }
        let f = operators::nonlinear(w, params)?;
        sup = sup.max(t.sqrt() * norm_dar(&f, 1.0 - params.s / 2.0) / (r * r));
    }
    Ok(sup)
}

/// Stepper run against the Picard oracle on a common mesh.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub times: Vec<f64>,
    pub stepper_norms: Vec<f64>,
    pub picard_norms: Vec<f64>,
    /// `‖u_step(t) - u_picard(t)‖_{D(A)}` at each mesh node.
    pub differences: Vec<f64>,
    /// `max_t difference / max_t ‖u_picard(t)‖_{D(A)}`.
    pub relative_linf: f64,
    pub picard: PicardState,
}

/// Runs the configured stepper to `t_final` with a step that divides the
/// oracle mesh, then solves the same problem by Picard iteration.
/// The configured `dt` is an upper bound on the step actually taken.
pub fn oracle_compare(config: &SimConfig, t_final: f64, mesh_size: usize, tol: f64) -> Result<OracleReport> {
    if mesh_size == 0 {
        return Err(Error::EmptyMesh);
    }
    let u0 = config.initial.build(&config.grid)?;
    let h = t_final / mesh_size as f64;
    let substeps = ((h / config.scheme.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let mut cfg = config.clone();
    cfg.t_end = t_final;
    cfg.scheme.dt = h / substeps as f64;
    cfg.snapshot_every = substeps;
    cfg.snapshot_dir = None;
    let stepped = integrator::run_from(&cfg, u0.clone())?;
    debug_assert_eq!(stepped.snapshots.len(), mesh_size + 1);

    let r = norm_dar(&u0, 1.0).max(f64::MIN_POSITIVE);
    let class = HolderClass::new(r, 0.25, t_final, 1.0)?;
    let (oracle, picard) = picard_solve(&u0, &config.params, &class, mesh_size, ORACLE_MAX_ITER, tol)?;
    let mut differences = Vec::with_capacity(oracle.times.len());
    for (a, b) in stepped.snapshots.iter().zip(&oracle.snapshots) {
        differences.push(norm_dar(&a.sub(b)?, 1.0));
    }
    let picard_norms: Vec<f64> = oracle.snapshots.iter().map(|u| norm_dar(u, 1.0)).collect();
    let scale = picard_norms.iter().cloned().fold(0.0, f64::max);
    let worst = differences.iter().cloned().fold(0.0, f64::max);
    Ok(OracleReport {
        times: oracle.times,
        stepper_norms: stepped.snapshots.iter().map(|u| norm_dar(u, 1.0)).collect(),
        picard_norms,
        differences,
        relative_linf: if scale > 0.0 { worst / scale } else { worst },
        picard,
    })
}

/// Iterate cap used by [`oracle_compare`].
pub const ORACLE_MAX_ITER: usize = 60;
