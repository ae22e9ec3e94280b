//! The `flns` command line.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or configuration error,
//! 3 the solution diverged.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::diagnostics::{self, RateFit};
use crate::error::{Error, Result};
use crate::integrator::{self, InitKind, InitialData};
use crate::io::csv::{emit_csv, emit_table};
use crate::io::manifest::{unix_now, RunManifest};
use crate::io::{parse_config, RunConfig};
use crate::mild::{self, HolderClass};
use crate::operators;
use crate::spectral::random::power_law_field;
use crate::spectral::testing::random_dealiased;
use crate::spectral::{self, norm_dar, GridSpec, Params, Regime};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

/// Extra smoothness of the rough data beyond the `D(A)` borderline.
pub const ROUGH_DELTA: f64 = 0.01;

/// Spectral decay of rough data sitting just inside `D(A)`:
/// `|û(k)| = |k|^{-(2 + dim/2 + δ)}`.
pub fn rough_decay_exponent(dim: usize) -> f64 {
    2.0 + dim as f64 / 2.0 + ROUGH_DELTA
}

#[derive(Debug, Parser)]
#[command(name = "flns", version, about = "Fractional LANS-alpha solver and property checks")]
pub struct Cli {
    /// Threshold for the command's pass/fail check.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Seed for random initial data; overrides `seed` from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run, writing snapshots, diagnostics CSV and a manifest.
    Simulate { config: PathBuf },
    /// Run and check the energy balance residual against --tol (default 1e-6).
    VerifyEnergy { config: PathBuf },
    /// Rough-data run and smoothing-rate fits of the D(A^{1+r}) norm.
    Smoothing {
        config: PathBuf,
        #[arg(long)]
        r: f64,
    },
    /// Compare the stepper with the Picard oracle on [0, T] (--tol, default 1e-5).
    OracleCompare {
        config: PathBuf,
        #[arg(long = "T")]
        t: f64,
    },
    /// Weighted Hölder quotients in the critical case (dim 2, s = 1/2).
    Holder {
        config: PathBuf,
        #[arg(long)]
        beta: f64,
    },
    /// Operator battery, including the nonlinear cancellation.
    OpsTest { config: Option<PathBuf> },
}

/// Maps an error to its exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Diverged { .. } => EXIT_DIVERGED,
        Error::NoContraction { .. } => EXIT_CHECK_FAILED,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(passed) => {
            if passed {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command; `Ok(false)` means its check failed.
pub fn execute(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Simulate { config } => simulate(cli, config),
        Command::VerifyEnergy { config } => verify_energy(cli, config),
        Command::Smoothing { config, r } => smoothing(cli, config, *r),
        Command::OracleCompare { config, t } => oracle_compare(cli, config, *t),
        Command::Holder { config, beta } => holder(cli, config, *beta),
        Command::OpsTest { config } => ops_test(cli, config.as_deref()),
    }
}

fn load(cli: &Cli, path: &Path) -> Result<RunConfig> {
    let mut cfg = parse_config(path)?;
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    println!("config {} (regime {})", path.display(), cfg.regime().name());
    Ok(cfg)
}

/// Output directory plus the manifest of everything written into it.
struct Outputs {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Outputs {
    fn open(cfg: &RunConfig, command: &str) -> Result<Self> {
        let started = unix_now();
        fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
        Ok(Self {
            dir: cfg.out_dir.clone(),
            manifest: RunManifest::new(command, cfg.to_text(), started),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn add(&mut self, path: &Path) -> Result<()> {
        self.manifest.add_file(&self.dir, path)
    }

    fn finish(mut self) -> Result<()> {
        let path = self.manifest.write(&self.dir)?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

fn simulate(cli: &Cli, path: &Path) -> Result<bool> {
    let cfg = load(cli, path)?;
    cfg.require_global()?;
    let mut out = Outputs::open(&cfg, "simulate")?;
    let snap_dir = out.path("snapshots");
    fs::create_dir_all(&snap_dir).map_err(|e| Error::io(&snap_dir, e))?;
    let mut sim = cfg.sim.clone();
    sim.snapshot_dir = Some(snap_dir.clone());
    let traj = integrator::run(&sim)?;
    let diag = out.path("diagnostics.csv");
    emit_csv(&traj.diag, &diag)?;
    out.add(&diag)?;
    for i in 0..traj.snapshots.len() {
        out.add(&snap_dir.join(format!("snap_{i:06}.flns")))?;
    }
    let last = traj.diag.last().expect("at least one record");
    println!(
        "t = {}  E1 = {:.6e}  |u|_D(A) = {:.6e}  snapshots = {}",
        last.t,
        last.e1,
        last.n_da,
        traj.snapshots.len()
    );
    out.finish()?;
    Ok(true)
}

fn verify_energy(cli: &Cli, path: &Path) -> Result<bool> {
    let cfg = load(cli, path)?;
    cfg.require_global()?;
    let tol = cli.tol.unwrap_or(1e-6);
    let mut out = Outputs::open(&cfg, "verify-energy")?;
    let traj = integrator::run(&cfg.sim)?;
    let residual = diagnostics::energy_balance_residual(&traj, &cfg.sim.params)?;
    let rows: Vec<Vec<f64>> = traj.diag.iter().zip(&residual).map(|(r, e)| vec![r.t, r.e1, *e]).collect();
    let csv = out.path("energy_balance.csv");
    emit_table(&["t", "E1", "residual"], &rows, &csv)?;
    out.add(&csv)?;
    out.finish()?;
    let worst = residual.iter().cloned().fold(0.0, f64::max);
    let passed = worst <= tol;
    println!(
        "max balance residual {worst:.3e} (tol {tol:.1e}): {}",
        verdict(passed)
    );
    Ok(passed)
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Margin on the smoothing exponent and half-width of the bounded `r = 0` band.
const SMOOTHING_MARGIN: f64 = 0.15;
const BOUNDED_BAND: f64 = 0.05;

fn smoothing(cli: &Cli, path: &Path, r: f64) -> Result<bool> {
    let cfg = load(cli, path)?;
    cfg.require_global()?;
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidParam(format!("--r must lie in (0, 1], got {r}")));
    }
    let tol = cli.tol.unwrap_or(SMOOTHING_MARGIN);
    let mut sim = cfg.sim.clone();
    let dim = sim.grid.dim();
    sim.initial = InitialData::new(
        InitKind::RandomSpectrum {
            decay_exponent: rough_decay_exponent(dim),
            seed: cfg.seed,
            band: None,
        },
        cfg.sim.initial.amplitude,
    );
    sim.snapshot_every = 1;
    let mut out = Outputs::open(&cfg, "smoothing")?;
    let traj = integrator::run(&sim)?;
    let window = (2.0 * sim.scheme.dt, 0.1f64.min(sim.t_end));
    let s = sim.params.s;
    let fits: Vec<RateFit> = vec![
        diagnostics::smoothing_rate(&traj, r, s, window)?,
        diagnostics::smoothing_rate(&traj, 0.0, s, window)?,
    ];
    let csv = out.path("smoothing_rate.csv");
    emit_csv(&fits, &csv)?;
    out.add(&csv)?;
    out.finish()?;
    let envelope = fits[0].within_envelope(tol);
    let bounded = fits[1].slope.abs() <= BOUNDED_BAND;
    println!(
        "r = {r}: slope {:.4} vs envelope {:.4}: {}",
        fits[0].slope,
        fits[0].expected - tol,
        verdict(envelope)
    );
    println!("r = 0: slope {:.4} within ±{BOUNDED_BAND}: {}", fits[1].slope, verdict(bounded));
    Ok(envelope && bounded)
}

fn oracle_compare(cli: &Cli, path: &Path, t_final: f64) -> Result<bool> {
    let cfg = load(cli, path)?;
    if !(t_final > 0.0 && t_final <= 1.0) {
        return Err(Error::InvalidParam(format!("--T must lie in (0, 1], got {t_final}")));
    }
    let tol = cli.tol.unwrap_or(1e-5);
    let mut out = Outputs::open(&cfg, "oracle-compare")?;
    let report = match mild::oracle_compare(&cfg.sim, t_final, cfg.mesh_size, 1e-13) {
        Err(Error::NoContraction { iterate }) => {
            println!("Picard iteration stopped contracting at iterate {iterate}: FAIL");
            return Ok(false);
        }
        other => other?,
    };
    let rows: Vec<Vec<f64>> = (0..report.times.len())
        .map(|i| {
            vec![
                report.times[i],
                report.stepper_norms[i],
                report.picard_norms[i],
                report.differences[i],
            ]
        })
        .collect();
    let csv = out.path("oracle_compare.csv");
    emit_table(&["t", "stepper_nDA", "picard_nDA", "difference"], &rows, &csv)?;
    out.add(&csv)?;
    let inc: Vec<Vec<f64>> = report
        .picard
        .increments_linf
        .iter()
        .zip(&report.picard.increments_l2)
        .enumerate()
        .map(|(j, (a, b))| vec![(j + 1) as f64, *a, *b])
        .collect();
    let csv = out.path("picard_increments.csv");
    emit_table(&["iterate", "inc_Linf_DA", "inc_L2_DA1ps2"], &inc, &csv)?;
    out.add(&csv)?;
    out.finish()?;
    let passed = report.picard.converged && report.relative_linf <= tol;
    println!(
        "relative L∞(D(A)) difference {:.3e} (tol {tol:.1e}), {} Picard iterates: {}",
        report.relative_linf,
        report.picard.increments_linf.len(),
        verdict(passed)
    );
    Ok(passed)
}

fn holder(cli: &Cli, path: &Path, beta: f64) -> Result<bool> {
    let cfg = load(cli, path)?;
    let sim = &cfg.sim;
    if sim.grid.dim() != 2 || sim.params.s != 0.5 {
        return Err(Error::WrongRegime(format!(
            "the Hölder class check needs dim = 2 and s = 0.5, got dim = {} and s = {}",
            sim.grid.dim(),
            sim.params.s
        )));
    }
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::InvalidParam(format!("--beta must lie in (0, 1/2), got {beta}")));
    }
    let t_final = sim.t_end.min(1.0);
    if !(t_final > 0.0) {
        return Err(Error::InvalidParam("t_end must be > 0".into()));
    }
    let mut run_cfg = sim.clone();
    run_cfg.t_end = t_final;
    run_cfg.snapshot_every = 1;
    let mut out = Outputs::open(&cfg, "holder")?;
    let traj = integrator::run(&run_cfg)?;
    let solution = diagnostics::holder_quotients(&traj, beta, 2, 0.5)?;
    let u0 = &traj.snapshots[0];
    let r = norm_dar(u0, 1.0).max(f64::MIN_POSITIVE);
    let semigroup = mild::semigroup_class_check(u0, &sim.params, &HolderClass::new(r, beta, t_final, 1.0)?)?;
    let csv = out.path("holder_solution.csv");
    emit_csv(std::slice::from_ref(&solution), &csv)?;
    out.add(&csv)?;
    let csv = out.path("holder_semigroup.csv");
    emit_csv(std::slice::from_ref(&semigroup), &csv)?;
    out.add(&csv)?;
    out.finish()?;
    for (name, rep) in [("solution", &solution), ("semigroup", &semigroup)] {
        println!(
            "{name}: quotients/|u0| = [{:.4}, {:.4}, {:.4}, {:.4}]  minimal C = {:.4}",
            rep.normalized[0], rep.normalized[1], rep.normalized[2], rep.normalized[3], rep.minimal_c
        );
    }
    let passed = solution.all_finite() && semigroup.all_finite();
    println!("all quotients finite: {}", verdict(passed));
    Ok(passed)
}

/// One line of the operator battery.
struct Check {
    name: String,
    value: f64,
    tol: f64,
}

fn battery(grid: &GridSpec, params: &Params) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut push = |name: &str, value: f64, tol: f64| {
        checks.push(Check {
            name: format!("{name} (dim {}, N {})", grid.dim(), grid.n()),
            value,
            tol,
        })
    };
    let u = power_law_field(grid, grid.n() / 2 - 1, 1.0, 17, false)?;
    let pu = spectral::leray_project(&u);
    let scale = u.coeff_norm();
    push(
        "Leray idempotence",
        spectral::leray_project(&pu).sub(&pu)?.coeff_norm() / scale,
        1e-14,
    );
    let div = (0..grid.len()).map(|i| pu.divergence_at(i).norm()).fold(0.0, f64::max);
    push("Leray divergence", div / scale, 1e-13);
    let a = spectral::semigroup_apply(&spectral::semigroup_apply(&pu, 0.1, params)?, 0.2, params)?;
    let b = spectral::semigroup_apply(&pu, 0.3, params)?;
    push("semigroup composition", a.sub(&b)?.coeff_norm() / pu.coeff_norm(), 1e-12);
    let h = spectral::helmholtz_inverse(&spectral::helmholtz(&pu, params.alpha), params.alpha);
    push("Helmholtz round trip", h.sub(&pu)?.coeff_norm() / pu.coeff_norm(), 1e-13);

    let shear = InitialData::new(InitKind::Shear, 1.0).build(grid)?;
    push("shear nonlinearity", operators::nonlinear(&shear, params)?.max_abs(), 1e-14);
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let u = random_dealiased(grid, seed);
        let f = operators::nonlinear(&u, params)?;
        let pairing = operators::energy_pairing(&u, &f, params.alpha)?;
        worst = worst.max(pairing.abs() / norm_dar(&u, 1.0).powi(3));
    }
    push("nonlinear cancellation", worst, 1e-10);
    Ok(checks)
}

fn ops_test(cli: &Cli, path: Option<&Path>) -> Result<bool> {
    let cases: Vec<(GridSpec, Params)> = match path {
        Some(p) => {
            let cfg = load(cli, p)?;
            vec![(cfg.sim.grid.clone(), cfg.sim.params)]
        }
        None => vec![
            (GridSpec::new(2, 32)?, Params::new(0.5, 1.0, 0.5, Regime::GlobalRange, 2)?),
            (GridSpec::new(3, 16)?, Params::new(0.5, 1.0, 0.75, Regime::GlobalRange, 3)?),
        ],
    };
    let mut stdout = std::io::stdout().lock();
    let mut passed = true;
    for (grid, params) in &cases {
        for c in battery(grid, params)? {
            let ok = c.value <= c.tol;
            passed &= ok;
            let _ = writeln!(stdout, "{}: {:.3e} (tol {:.0e}) {}", c.name, c.value, c.tol, verdict(ok));
        }
    }
    Ok(passed)
}
