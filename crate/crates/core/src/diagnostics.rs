//! Energies, balance residuals, a priori bound monitors, smoothing-rate fits
//! and spectra measured along trajectories.
//!
//! Report-style operations never fail on a bad measurement; deciding pass or
//! fail is left to the caller.

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::mild::{self, HolderClass, HolderReport};
use crate::operators;
use crate::spectral::{norm_dar, stokes_seminorm, Params, Regime, SpectralField};

/// Per-time energy bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagRecord {
    pub t: f64,
    /// `‖u‖²`
    pub e0: f64,
    /// `‖u‖² + α²‖A^{1/2}u‖²`
    pub e1: f64,
    /// `‖A^{s/2}u‖² + α²‖A^{(1+s)/2}u‖²`
    pub d: f64,
    /// `‖u‖_{D(A)}`
    pub n_da: f64,
    /// `‖A^{1+s/2}u‖`
    pub n_1ps2: f64,
    /// `|⟨(1+α²A)u, f(u,u)⟩| / ‖u‖³_{D(A)}`
    pub cancel: f64,
}

pub fn record(u: &SpectralField, params: &Params, t: f64) -> Result<DiagRecord> {
    let f = operators::nonlinear(u, params)?;
    record_with_rhs(u, &f, params, t)
}

/// As [`record`] with `f(u,u)` already evaluated.
pub fn record_with_rhs(u: &SpectralField, f: &SpectralField, params: &Params, t: f64) -> Result<DiagRecord> {
    let a2 = params.alpha * params.alpha;
    let s = params.s;
    let l2 = u.l2_norm();
    let e0 = l2 * l2;
    let e1 = e0 + a2 * stokes_seminorm(u, 0.5).powi(2);
    let d = stokes_seminorm(u, s / 2.0).powi(2) + a2 * stokes_seminorm(u, (1.0 + s) / 2.0).powi(2);
    let n_da = norm_dar(u, 1.0);
    let pairing = operators::energy_pairing(u, f, params.alpha)?;
    Ok(DiagRecord {
        t,
        e0,
        e1,
        d,
        n_da,
        n_1ps2: stokes_seminorm(u, 1.0 + s / 2.0),
        cancel: pairing.abs() / (n_da.powi(3) + f64::MIN_POSITIVE),
    })
}

/// Relative defect of `E1(t) + 2ν∫₀ᵗ D dτ = E1(0)` at every record, with
/// the time integral taken by the trapezoid rule over the records.
pub fn energy_balance_residual(traj: &Trajectory, params: &Params) -> Result<Vec<f64>> {
    let recs = &traj.diag;
    if recs.len() < 2 {
        return Err(Error::TooFewRecords(recs.len()));
    }
    let e1_0 = recs[0].e1;
    let mut out = Vec::with_capacity(recs.len());
    let mut dissipated = 0.0;
    out.push(0.0);
    for w in recs.windows(2) {
        dissipated += 0.5 * (w[1].t - w[0].t) * (w[0].d + w[1].d);
        let defect = (w[1].e1 + 2.0 * params.nu * dissipated - e1_0).abs();
        out.push(if e1_0 > 0.0 { defect / e1_0 } else { defect });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AprioriReport {
    pub initial_norm: f64,
    pub sup_norm: f64,
    /// `sup_t ‖u‖_{D(A)} / ‖u₀‖_{D(A)}`; 1 for zero data.
    pub ratio: f64,
    /// `∫ ‖A^{1+s/2}u‖² dt` over the run.
    pub dissipation_integral: f64,
    pub global_regime: bool,
}

impl AprioriReport {
    pub fn is_bounded(&self) -> bool {
        self.ratio.is_finite() && self.dissipation_integral.is_finite()
    }
}

pub fn apriori_monitor(traj: &Trajectory, params: &Params) -> AprioriReport {
    let recs = &traj.diag;
    let (initial, sup, integral) = if recs.is_empty() {
        let norms: Vec<f64> = traj.snapshots.iter().map(|u| norm_dar(u, 1.0)).collect();
        let sup = norms.iter().cloned().fold(0.0, f64::max);
        (norms.first().copied().unwrap_or(0.0), sup, 0.0)
    } else {
        let sup = recs.iter().map(|r| r.n_da).fold(0.0, f64::max);
        let integral = recs
            .windows(2)
            .map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].n_1ps2.powi(2) + w[1].n_1ps2.powi(2)))
            .sum();
        (recs[0].n_da, sup, integral)
    };
    AprioriReport {
        initial_norm: initial,
        sup_norm: sup,
        ratio: if initial > 0.0 { sup / initial } else { 1.0 },
        dissipation_integral: integral,
        global_regime: params.regime == Regime::GlobalRange,
    }
}

/// Log-log fit of `‖u(t)‖_{D(A^{1+r})}` against `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub window: (f64, f64),
    pub slope: f64,
    pub r: f64,
    /// `-r/s`, the envelope exponent allowed by the smoothing estimate.
    pub expected: f64,
    /// RMS of the fit residual in log space.
    pub residual: f64,
    pub samples: usize,
}

impl RateFit {
    /// One-sided check: the measured exponent may not fall below `expected - margin`.
    pub fn within_envelope(&self, margin: f64) -> bool {
        self.slope >= self.expected - margin
    }
}

/// Number of log-uniform sample targets used by [`smoothing_rate`].
const RATE_SAMPLES: usize = 24;

pub fn smoothing_rate(traj: &Trajectory, r: f64, s: f64, window: (f64, f64)) -> Result<RateFit> {
    let (t_min, t_max) = window;
    let candidates: Vec<usize> = traj
        .times
        .iter()
        .enumerate()
        .filter(|(_, &t)| t > 0.0 && t >= t_min * (1.0 - 1e-12) && t <= t_max * (1.0 + 1e-12))
        .map(|(i, _)| i)
        .collect();
    if candidates.len() < 2 || !(t_min > 0.0) {
        return Err(Error::EmptyWindow(t_min, t_max));
    }
    // nearest snapshot to each log-uniform target, so early times are not underweighted
    let (lo, hi) = (t_min.ln(), t_max.ln());
    let mut picked: Vec<usize> = (0..RATE_SAMPLES)
        .map(|j| {
            let target = lo + (hi - lo) * j as f64 / (RATE_SAMPLES - 1) as f64;
            *candidates
                .iter()
                .min_by(|&&a, &&b| {
                    let da = (traj.times[a].ln() - target).abs();
                    let db = (traj.times[b].ln() - target).abs();
                    da.total_cmp(&db)
                })
                .expect("nonempty")
        })
        .collect();
    picked.dedup();
    if picked.len() < 2 {
        return Err(Error::EmptyWindow(t_min, t_max));
    }
    let xs: Vec<f64> = picked.iter().map(|&i| traj.times[i].ln()).collect();
    let ys: Vec<f64> = picked
        .iter()
        .map(|&i| norm_dar(&traj.snapshots[i], 1.0 + r).ln())
        .collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    Ok(RateFit {
        window,
        slope,
        r,
        expected: -r / s,
        residual,
        samples: xs.len(),
    })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Weighted Hölder quotients of a critical-case trajectory, normalized by
/// `‖u₀‖_{D(A)}` so `minimal_c` is the constant in `R = C‖u₀‖_{D(A)}`.
pub fn holder_quotients(traj: &Trajectory, beta: f64, dim: usize, s: f64) -> Result<HolderReport> {
    if dim != 2 || (s - 0.5).abs() > 1e-12 {
        return Err(Error::WrongRegime(format!(
            "Hölder-class checks need (dim, s) = (2, 1/2), got ({dim}, {s})"
        )));
    }
    let (t_end, _) = traj.last().ok_or(Error::EmptyMesh)?;
    let u0 = norm_dar(&traj.snapshots[0], 1.0);
    let class = HolderClass::new(if u0 > 0.0 { u0 } else { 1.0 }, beta, t_end.min(1.0), 1.0)?;
    Ok(mild::holder_membership(traj, &class, s))
}

/// Shell-summed energy `E(κ) = ½ Σ_{κ ≤ |k| < κ+1} |û(k)|²` in physical normalization.
pub fn spectrum(u: &SpectralField) -> Vec<f64> {
    let grid = u.grid();
    let kmax = grid.k2().iter().cloned().fold(0.0, f64::max).sqrt();
    let mut shells = vec![0.0; kmax.floor() as usize + 1];
    let vol = grid.volume();
    for (idx, &k2) in grid.k2().iter().enumerate() {
        let e: f64 = u.mode(idx).iter().map(|c| c.norm_sqr()).sum();
        shells[k2.sqrt().floor() as usize] += 0.5 * vol * e;
    }
    shells
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{run, InitKind, InitialData, SchemeKind, SimConfig, StepScheme};
    use crate::spectral::testing::random_dealiased;
    use crate::spectral::GridSpec;
    use std::f64::consts::PI;

    fn shear(g: &GridSpec) -> SpectralField {
        InitialData::new(InitKind::Shear, 1.0).build(g).unwrap()
    }

    #[test]
    fn shear_record() {
        let g = GridSpec::new(2, 16).unwrap();
        let alpha: f64 = 0.5;
        let p = Params::new(alpha, 1.0, 0.7, Regime::Unrestricted, 2).unwrap();
        let r = record(&shear(&g), &p, 0.0).unwrap();
        let e = 2.0 * PI * PI;
        assert!((r.e0 - e).abs() < 1e-12);
        assert!((r.e1 - (1.0 + alpha * alpha) * e).abs() < 1e-12);
        assert!((r.d - (1.0 + alpha * alpha) * e).abs() < 1e-12);
        assert!(r.cancel < 1e-16);
        assert!(r.e1 >= r.e0);
    }

    #[test]
    fn zero_record() {
        let g = GridSpec::new(2, 8).unwrap();
        let p = Params::inferred(0.5, 1.0, 0.5, 2).unwrap();
        let r = record(&SpectralField::zeros(&g), &p, 0.0).unwrap();
        assert_eq!((r.e0, r.e1, r.d, r.n_da, r.n_1ps2, r.cancel), (0.0, 0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn random_record_cancels() {
        let g = GridSpec::new(2, 32).unwrap();
        let p = Params::inferred(0.8, 0.1, 0.5, 2).unwrap();
        for seed in 0..4 {
            let r = record(&random_dealiased(&g, seed).scale(5.0), &p, 0.0).unwrap();
            assert!(r.cancel <= 1e-10, "{}", r.cancel);
        }
    }

    fn shear_run(dt: f64) -> Trajectory {
        let g = GridSpec::new(2, 16).unwrap();
        let p = Params::inferred(0.5, 1.0, 0.75, 2).unwrap();
        let cfg = SimConfig::new(
            g,
            p,
            StepScheme::new(SchemeKind::Etd2rk, dt).unwrap(),
            0.2,
            InitialData::new(InitKind::Shear, 1.0),
        );
        run(&cfg).unwrap()
    }

    #[test]
    fn shear_balance_is_quadrature_limited() {
        // E1 ∝ e^{-λt} with λ = 2ν, and the trapezoid rule on that exponential
        // is off by exactly (1 - e^{-λt})((λh/2)coth(λh/2) - 1)
        let p = Params::inferred(0.5, 1.0, 0.75, 2).unwrap();
        let h = 1e-3;
        let traj = shear_run(h);
        let res = energy_balance_residual(&traj, &p).unwrap();
        let lambda = 2.0 * p.nu;
        let x = 0.5 * lambda * h;
        for (r, rec) in res.iter().zip(&traj.diag) {
            let exact = -(-lambda * rec.t).exp_m1() * (x / x.tanh() - 1.0);
            assert!((r - exact).abs() <= 1e-6 * exact + 1e-14, "t = {}: {r} vs {exact}", rec.t);
        }
    }

    #[test]
    fn balance_needs_two_records() {
        let p = Params::inferred(0.5, 1.0, 0.75, 2).unwrap();
        let mut t = shear_run(0.1);
        t.diag.truncate(1);
        assert!(matches!(energy_balance_residual(&t, &p), Err(Error::TooFewRecords(1))));
    }

    #[test]
    fn shear_apriori_ratio_is_one() {
        let p = Params::inferred(0.5, 1.0, 0.75, 2).unwrap();
        let rep = apriori_monitor(&shear_run(1e-2), &p);
        assert_eq!(rep.ratio, 1.0);
        assert!(rep.is_bounded() && rep.global_regime);
    }

    #[test]
    fn smooth_data_has_flat_rate() {
        let t = shear_run(1e-3);
        for r in [0.0, 0.4] {
            let fit = smoothing_rate(&t, r, 0.75, (2e-3, 0.1)).unwrap();
            // shear decays like e^{-t}: d ln/d ln t = -t, small on [0.002, 0.1]
            assert!(fit.slope.abs() < 0.05, "{fit:?}");
        }
        assert!(matches!(
            smoothing_rate(&t, 0.1, 0.75, (0.5, 0.9)),
            Err(Error::EmptyWindow(_, _))
        ));
    }

    #[test]
    fn spectrum_of_shear_and_sum_rule() {
        let g = GridSpec::new(2, 16).unwrap();
        let e = spectrum(&shear(&g));
        assert!((e[1] - PI * PI).abs() < 1e-12);
        assert!(e.iter().enumerate().all(|(k, v)| k == 1 || *v == 0.0));
        assert!(spectrum(&SpectralField::zeros(&g)).iter().all(|v| *v == 0.0));
        let u = random_dealiased(&g, 3);
        let total: f64 = spectrum(&u).iter().sum();
        let e0 = u.l2_norm().powi(2);
        assert!((total - e0 / 2.0).abs() <= 1e-12 * e0);
    }

    #[test]
    fn holder_quotients_need_critical_case() {
        let t = shear_run(1e-2);
        assert!(matches!(holder_quotients(&t, 0.25, 2, 0.75), Err(Error::WrongRegime(_))));
    }
}
