//! Line-oriented `key = value` run configuration.
//!
//! ```text
//! # Taylor-Green at the critical order
//! dim = 2
//! N = 64
//! alpha = 0.5
//! nu = 0.1
//! s = 0.5
//! dt = 1e-3
//! t_end = 1
//! init = taylor-green
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::integrator::{InitKind, InitialData, SchemeKind, SimConfig, StepScheme};
use crate::spectral::{GridSpec, Params, Regime};

const REQUIRED: [&str; 8] = ["dim", "N", "alpha", "nu", "s", "dt", "t_end", "init"];
const OPTIONAL: [&str; 11] = [
    "scheme",
    "galerkin_N",
    "snapshot_every",
    "amplitude",
    "seed",
    "decay_exponent",
    "out_dir",
    "band",
    "cfl_safety",
    "linear_only",
    "mesh_size",
];

/// A parsed configuration file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Mesh intervals for the Picard oracle.
    pub mesh_size: usize,
    /// Key/value pairs as read, in key order.
    pub echo: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn regime(&self) -> Regime {
        self.sim.params.regime
    }

    /// Fails unless `s` lies in the global range `[dim/4, 1)`.
    pub fn require_global(&self) -> Result<()> {
        let dim = self.sim.grid.dim();
        let s = self.sim.params.s;
        if self.regime() != Regime::GlobalRange {
            return Err(Error::RegimeViolation {
                s,
                dim,
                min: dim as f64 / 4.0,
            });
        }
        Ok(())
    }

    /// Replaces the seed of random initial data.
    pub fn override_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.echo.insert("seed".into(), seed.to_string());
        if let InitKind::RandomSpectrum { seed: s, .. } = &mut self.sim.initial.kind {
            *s = seed;
        }
    }

    /// The configuration in its own file syntax.
    pub fn to_text(&self) -> String {
        self.echo.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

struct Entries {
    map: BTreeMap<String, (String, usize)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.map.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|e| Error::BadValue {
                key: key.into(),
                line,
                msg: format!("`{v}`: {e}"),
            }),
        }
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?.ok_or_else(|| Error::MissingKey(key.into()))
    }

    fn bad(&self, key: &str, msg: impl std::fmt::Display) -> Error {
        Error::BadValue {
            key: key.into(),
            line: self.map.get(key).map(|(_, l)| *l).unwrap_or(0),
            msg: msg.to_string(),
        }
    }
}

fn tokenize(text: &str) -> Result<Entries> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| Error::BadValue {
            key: body.into(),
            line,
            msg: "expected `key = value`".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !REQUIRED.contains(&key) && !OPTIONAL.contains(&key) {
            return Err(Error::BadValue {
                key: key.into(),
                line,
                msg: "unknown key".into(),
            });
        }
        if value.is_empty() {
            return Err(Error::BadValue {
                key: key.into(),
                line,
                msg: "empty value".into(),
            });
        }
        if map.insert(key.to_string(), (value.to_string(), line)).is_some() {
            return Err(Error::BadValue {
                key: key.into(),
                line,
                msg: "duplicate key".into(),
            });
        }
    }
    Ok(Entries { map })
}

/// Parses configuration text; relative snapshot paths resolve against `base`.
pub fn parse_config_str(text: &str, base: &Path) -> Result<RunConfig> {
    let e = tokenize(text)?;
    for key in REQUIRED {
        if e.raw(key).is_none() {
            return Err(Error::MissingKey(key.into()));
        }
    }
    let dim: usize = e.require("dim")?;
    let n: usize = e.require("N")?;
    let grid = GridSpec::new(dim, n).map_err(|err| match err {
        Error::BadDim(_) => e.bad("dim", err),
        other => e.bad("N", other),
    })?;
    let alpha: f64 = e.require("alpha")?;
    let nu: f64 = e.require("nu")?;
    let s: f64 = e.require("s")?;
    let params = Params::inferred(alpha, nu, s, dim).map_err(|err| {
        let key = if !(alpha >= 0.0 && alpha.is_finite()) {
            "alpha"
        } else if !(nu > 0.0 && nu.is_finite()) {
            "nu"
        } else {
            "s"
        };
        e.bad(key, err)
    })?;

    let kind = match e.raw("scheme").map(|(v, _)| v) {
        None | Some("etd2rk") => SchemeKind::Etd2rk,
        Some("exp-euler") => SchemeKind::ExpEuler,
        Some(other) => return Err(e.bad("scheme", format!("unknown scheme `{other}`"))),
    };
    let dt: f64 = e.require("dt")?;
    let mut scheme = StepScheme::new(kind, dt).map_err(|err| e.bad("dt", err))?;
    if let Some(c) = e.get::<f64>("cfl_safety")? {
        if !(c > 0.0) {
            return Err(e.bad("cfl_safety", "must be > 0"));
        }
        scheme.cfl_safety = c;
    }
    let t_end: f64 = e.require("t_end")?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(e.bad("t_end", "must be >= 0"));
    }

    let seed: u64 = e.get("seed")?.unwrap_or(0);
    let amplitude: f64 = e.get("amplitude")?.unwrap_or(1.0);
    if !amplitude.is_finite() {
        return Err(e.bad("amplitude", "must be finite"));
    }
    let (init, _) = e.raw("init").expect("checked above");
    let kind = match init {
        "taylor-green" => InitKind::TaylorGreen,
        "shear" => InitKind::Shear,
        "random" => InitKind::RandomSpectrum {
            decay_exponent: e.require("decay_exponent")?,
            seed,
            band: e.get("band")?,
        },
        other => match other.strip_prefix("snapshot:") {
            Some(p) if !p.trim().is_empty() => InitKind::FromSnapshot {
                path: base.join(p.trim()),
            },
            _ => return Err(e.bad("init", format!("unknown initial data `{other}`"))),
        },
    };
    if let InitKind::RandomSpectrum { band: Some(b), .. } = kind {
        if b == 0 || b >= n / 2 {
            return Err(e.bad("band", format!("must lie in [1, {}]", n / 2 - 1)));
        }
    }

    let mut sim = SimConfig::new(grid, params, scheme, t_end, InitialData::new(kind, amplitude));
    sim.galerkin_n = e.get("galerkin_N")?;
    sim.snapshot_every = e.get("snapshot_every")?.unwrap_or(1);
    sim.linear_only = e.get("linear_only")?.unwrap_or(false);
    sim.validate().map_err(|err| e.bad("galerkin_N", err))?;
    let mesh_size: usize = e.get("mesh_size")?.unwrap_or(crate::mild::DEFAULT_MESH);
    if mesh_size == 0 {
        return Err(e.bad("mesh_size", "must be > 0"));
    }

    let mut echo: BTreeMap<String, String> = e.map.iter().map(|(k, (v, _))| (k.clone(), v.clone())).collect();
    echo.insert("regime".into(), params.regime.name().into());
    Ok(RunConfig {
        sim,
        out_dir: e.raw("out_dir").map(|(v, _)| base.join(v)).unwrap_or_else(|| base.join("out")),
        seed,
        mesh_size,
        echo,
    })
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
# minimal 2D run
dim = 2
N = 64
alpha = 0.5
nu = 0.1
s = 0.5
dt = 1e-3
t_end = 1
init = taylor-green
";

    fn parse(text: &str) -> Result<RunConfig> {
        parse_config_str(text, Path::new("."))
    }

    #[test]
    fn minimal_config() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.regime(), Regime::GlobalRange);
        assert!(c.require_global().is_ok());
        assert_eq!(c.sim.grid.n(), 64);
        assert_eq!(c.sim.scheme.kind, SchemeKind::Etd2rk);
        assert_eq!(c.sim.initial.kind, InitKind::TaylorGreen);
        assert_eq!(c.echo["regime"], "GlobalRange");
    }

    #[test]
    fn below_global_range() {
        let c = parse(&MINIMAL.replace("s = 0.5", "s = 0.4")).unwrap();
        assert_eq!(c.regime(), Regime::Unrestricted);
        assert!(matches!(
            c.require_global(),
            Err(Error::RegimeViolation { dim: 2, min, .. }) if min == 0.5
        ));
    }

    #[test]
    fn missing_key() {
        let err = parse(&MINIMAL.replace("nu = 0.1\n", "")).unwrap_err();
        assert!(matches!(err, Error::MissingKey(k) if k == "nu"));
    }

    #[test]
    fn bad_value_reports_line() {
        let err = parse(&MINIMAL.replace("dt = 1e-3", "dt = fast")).unwrap_err();
        assert!(matches!(err, Error::BadValue { key, line: 7, .. } if key == "dt"));
        let err = parse(&MINIMAL.replace("N = 64", "N = 63")).unwrap_err();
        assert!(matches!(err, Error::BadValue { key, line: 3, .. } if key == "N"));
        let err = parse(&format!("{MINIMAL}colour = blue\n")).unwrap_err();
        assert!(matches!(err, Error::BadValue { key, .. } if key == "colour"));
        let err = parse(&format!("{MINIMAL}dim = 3\n")).unwrap_err();
        assert!(matches!(err, Error::BadValue { msg, .. } if msg.contains("duplicate")));
    }

    #[test]
    fn random_init_and_seed_override() {
        let text = MINIMAL.replace("init = taylor-green", "init = random\ndecay_exponent = 3\nseed = 7 # phases");
        let mut c = parse(&text).unwrap();
        assert_eq!(c.seed, 7);
        c.override_seed(11);
        assert!(matches!(c.sim.initial.kind, InitKind::RandomSpectrum { seed: 11, .. }));
        let err = parse(&MINIMAL.replace("init = taylor-green", "init = random")).unwrap_err();
        assert!(matches!(err, Error::MissingKey(k) if k == "decay_exponent"));
    }

    #[test]
    fn snapshot_path_resolves_against_config_dir() {
        let text = MINIMAL.replace("init = taylor-green", "init = snapshot:data/u0.flns");
        let c = parse_config_str(&text, Path::new("/runs")).unwrap();
        assert_eq!(
            c.sim.initial.kind,
            InitKind::FromSnapshot {
                path: PathBuf::from("/runs/data/u0.flns")
            }
        );
    }

    #[test]
    fn echo_round_trips() {
        let c = parse(MINIMAL).unwrap();
        let mut text = c.to_text();
        text = text.lines().filter(|l| !l.starts_with("regime")).map(|l| format!("{l}\n")).collect();
        let again = parse(&text).unwrap();
        assert_eq!(again.echo, c.echo);
    }
}
