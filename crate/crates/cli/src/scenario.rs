//! Scenario files: flat `key = value` pairs grouped in `[section]`s.
//!
//! ```text
//! [model]
//! preset = paper-2015
//! diffusivity = 0.02
//!
//! [domain]
//! kind = bounded
//! x_a = -1
//! x_b = 1
//!
//! [profile]
//! kind = centered_bump
//! level = 400.23
//!
//! [solvers]
//! run = spectral_local, spectral_global, oracle_global
//! ```
//!
//! `#` and `;` start comments. Lists are comma separated.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use transpol::greens::KernelMethod;
use transpol::oracle::SweepConfig;
use transpol::spectral::{CosineBasis, DEFAULT_MODES};
use transpol::{InitialProfile, ModelParams, SpatialDomain};

use crate::error::InputError;

pub const PRESET_PAPER_2015: &str = "paper-2015";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Solver {
    Aspatial,
    SpectralLocal,
    SpectralGlobal,
    GreensLocal,
    GreensGlobal,
    OracleLocal,
    OracleGlobal,
}

impl Solver {
    pub const ALL: [Solver; 7] = [
        Solver::Aspatial,
        Solver::SpectralLocal,
        Solver::SpectralGlobal,
        Solver::GreensLocal,
        Solver::GreensGlobal,
        Solver::OracleLocal,
        Solver::OracleGlobal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Solver::Aspatial => "aspatial",
            Solver::SpectralLocal => "spectral_local",
            Solver::SpectralGlobal => "spectral_global",
            Solver::GreensLocal => "greens_local",
            Solver::GreensGlobal => "greens_global",
            Solver::OracleLocal => "oracle_local",
            Solver::OracleGlobal => "oracle_global",
        }
    }

    pub fn is_global(self) -> bool {
        matches!(self, Solver::SpectralGlobal | Solver::GreensGlobal | Solver::OracleGlobal)
    }
}

impl FromStr for Solver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Solver::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown solver `{s}`"))
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    LocalEqualsGlobal,
    AggregateDecay,
    UpperBound,
    LongrunCleanup,
}

impl Check {
    pub const ALL: [Check; 4] = [
        Check::LocalEqualsGlobal,
        Check::AggregateDecay,
        Check::UpperBound,
        Check::LongrunCleanup,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::LocalEqualsGlobal => "local_equals_global",
            Check::AggregateDecay => "aggregate_decay",
            Check::UpperBound => "upper_bound",
            Check::LongrunCleanup => "longrun_cleanup",
        }
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Check::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown check `{s}`"))
    }
}

/// Everything needed to run solvers and checks and write their output.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub params: ModelParams,
    pub domain: SpatialDomain,
    pub profile: InitialProfile,
    pub nx: usize,
    pub nt: usize,
    pub solvers: Vec<Solver>,
    pub checks: Vec<Check>,
    pub horizons: Vec<f64>,
    /// Constant tax for the long-run check; the global policy when absent.
    pub cleanup_tax: Option<f64>,
    pub modes: usize,
    pub basis: CosineBasis,
    pub kernel: KernelMethod,
    pub sweep: SweepConfig,
    pub mc_seed: u64,
    pub out_dir: PathBuf,
}

impl Scenario {
    /// Bounded `[-1, 1]`, paper constants, given profile, every applicable solver.
    pub fn preset(profile: InitialProfile, domain: SpatialDomain) -> Self {
        let solvers = if domain.is_bounded() {
            vec![
                Solver::Aspatial,
                Solver::SpectralLocal,
                Solver::SpectralGlobal,
                Solver::OracleLocal,
                Solver::OracleGlobal,
            ]
        } else {
            vec![
                Solver::Aspatial,
                Solver::GreensLocal,
                Solver::GreensGlobal,
                Solver::OracleLocal,
                Solver::OracleGlobal,
            ]
        };
        Self {
            name: PRESET_PAPER_2015.into(),
            params: ModelParams::paper_2015(),
            domain,
            profile,
            nx: 201,
            nt: 201,
            solvers,
            checks: Check::ALL.to_vec(),
            horizons: vec![10.0, 20.0, 40.0, 80.0],
            cleanup_tax: None,
            modes: DEFAULT_MODES,
            basis: CosineBasis::default(),
            kernel: KernelMethod::default(),
            sweep: SweepConfig::default(),
            mc_seed: 0,
            out_dir: PathBuf::from("out"),
        }
    }

    /// Replaces the Monte Carlo seed everywhere it is used.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.mc_seed = seed;
        if let KernelMethod::MonteCarlo { samples, .. } = self.kernel {
            self.kernel = KernelMethod::MonteCarlo { samples, seed };
        }
        self
    }

    /// Reads and parses a file; the name defaults to the file stem.
    pub fn from_file(path: &Path, force_preset: bool) -> Result<Self, InputError> {
        let text = std::fs::read_to_string(path).map_err(|e| InputError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut s = parse(&text, force_preset)?;
        if s.name.is_empty() {
            s.name = path
                .file_stem()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(s)
    }

    /// Parses scenario text. With `force_preset`, model keys absent from the
    /// text take the `paper-2015` values.
    pub fn parse(text: &str, force_preset: bool) -> Result<Self, InputError> {
        parse(text, force_preset)
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
    used: bool,
}

type Sections = BTreeMap<String, BTreeMap<String, Entry>>;

fn tokenize(text: &str) -> Result<Sections, InputError> {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split(['#', ';']).next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| InputError::Syntax {
                line,
                message: format!("unterminated section header `{body}`"),
            })?;
            let name = name.trim().to_string();
            if sections.contains_key(&name) {
                return Err(InputError::Syntax {
                    line,
                    message: format!("section [{name}] appears twice"),
                });
            }
            sections.insert(name.clone(), BTreeMap::new());
            current = Some(name);
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| InputError::Syntax {
            line,
            message: format!("expected `key = value`, got `{body}`"),
        })?;
        let section = current.as_ref().ok_or_else(|| InputError::Syntax {
            line,
            message: "key outside of any section".into(),
        })?;
        let key = key.trim().to_string();
        let map = sections.get_mut(section).expect("section inserted above");
        if map.contains_key(&key) {
            return Err(InputError::Syntax {
                line,
                message: format!("`{section}.{key}` given twice"),
            });
        }
        map.insert(
            key,
            Entry {
                value: value.trim().to_string(),
                line,
                used: false,
            },
        );
    }
    Ok(sections)
}

const KNOWN_SECTIONS: [&str; 8] = ["scenario", "model", "domain", "profile", "grid", "solvers", "checks", "output"];

struct Reader {
    sections: Sections,
}

impl Reader {
    fn raw(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        let e = self.sections.get_mut(section)?.get_mut(key)?;
        e.used = true;
        Some((e.value.clone(), e.line))
    }

    fn opt<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>, InputError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|e: T::Err| InputError::Field {
                field: format!("{section}.{key}"),
                line: Some(line),
                message: format!("cannot parse `{v}`: {e}"),
            }),
        }
    }

    fn or<T: FromStr>(&mut self, section: &str, key: &str, default: T) -> Result<T, InputError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.opt(section, key)?.unwrap_or(default))
    }

    fn req<T: FromStr>(&mut self, section: &str, key: &str) -> Result<T, InputError>
    where
        T::Err: fmt::Display,
    {
        self.opt(section, key)?.ok_or_else(|| InputError::Field {
            field: format!("{section}.{key}"),
            line: None,
            message: "required field is missing".into(),
        })
    }

    fn list<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<Vec<T>>, InputError>
    where
        T::Err: fmt::Display,
    {
        let Some((v, line)) = self.raw(section, key) else {
            return Ok(None);
        };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|e: T::Err| InputError::Field {
                    field: format!("{section}.{key}"),
                    line: Some(line),
                    message: format!("cannot parse `{s}`: {e}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn line(&self, section: &str, key: &str) -> Option<usize> {
        self.sections.get(section)?.get(key).map(|e| e.line)
    }

    fn unused(&self) -> Option<(String, usize)> {
        self.sections.iter().find_map(|(s, m)| {
            m.iter()
                .find(|(_, e)| !e.used)
                .map(|(k, e)| (format!("{s}.{k}"), e.line))
        })
    }
}

fn invalid(field: &str, line: Option<usize>, err: impl fmt::Display) -> InputError {
    InputError::Field {
        field: field.into(),
        line,
        message: err.to_string(),
    }
}

fn parse(text: &str, force_preset: bool) -> Result<Scenario, InputError> {
    let sections = tokenize(text)?;
    if let Some(unknown) = sections.keys().find(|k| !KNOWN_SECTIONS.contains(&k.as_str())) {
        return Err(InputError::Field {
            field: format!("[{unknown}]"),
            line: None,
            message: format!("unknown section; expected one of {}", KNOWN_SECTIONS.join(", ")),
        });
    }
    let mut r = Reader { sections };

    let preset = match r.opt::<String>("model", "preset")? {
        None => force_preset,
        Some(p) if p == PRESET_PAPER_2015 => true,
        Some(p) => {
            return Err(invalid(
                "model.preset",
                r.line("model", "preset"),
                format!("unknown preset `{p}` (only `{PRESET_PAPER_2015}` exists)"),
            ))
        }
    };
    let base = ModelParams::paper_2015();
    let mut model = |key: &str, default: f64| -> Result<f64, InputError> {
        if preset {
            r.or("model", key, default)
        } else {
            r.req("model", key)
        }
    };
    let params = ModelParams {
        eta: model("eta", base.eta)?,
        delta: model("delta", base.delta)?,
        rho: model("rho", base.rho)?,
        theta: model("theta", base.theta)?,
        horizon: model("horizon", base.horizon)?,
        diffusivity: model("diffusivity", base.diffusivity)?,
    };
    params
        .validate()
        .map_err(|e| invalid("model", r.line("model", "eta"), e))?;

    let kind: String = r.or("domain", "kind", "bounded".to_string())?;
    let domain = match kind.as_str() {
        "bounded" => SpatialDomain::bounded(r.or("domain", "x_a", -1.0)?, r.or("domain", "x_b", 1.0)?),
        "unbounded" => SpatialDomain::unbounded(r.or("domain", "half_width", 1.0)?),
        other => {
            return Err(invalid(
                "domain.kind",
                r.line("domain", "kind"),
                format!("expected `bounded` or `unbounded`, got `{other}`"),
            ))
        }
    }
    .map_err(|e| invalid("domain", r.line("domain", "kind"), e))?;

    let kind: String = r.req("profile", "kind")?;
    let level_default = if preset { Some(ModelParams::PAPER_2015_P0) } else { None };
    let mut level = || -> Result<f64, InputError> {
        match level_default {
            Some(l) => r.or("profile", "level", l),
            None => r.req("profile", "level"),
        }
    };
    let profile = match kind.as_str() {
        "constant" => InitialProfile::constant(level()?),
        "centered_bump" => InitialProfile::centered_bump(level()?),
        "tabulated" => {
            let xs = r.list("profile", "positions")?.unwrap_or_default();
            let vs = r.list("profile", "values")?.unwrap_or_default();
            InitialProfile::tabulated(xs, vs)
        }
        other => {
            return Err(invalid(
                "profile.kind",
                r.line("profile", "kind"),
                format!("expected constant, centered_bump or tabulated, got `{other}`"),
            ))
        }
    }
    .map_err(|e| invalid("profile", r.line("profile", "kind"), e))?;

    let nx: usize = r.or("grid", "nx", 201)?;
    let nt: usize = r.or("grid", "nt", 201)?;
    if nx < 3 || nt < 3 {
        return Err(invalid("grid", r.line("grid", "nx"), "nx and nt must be at least 3"));
    }

    let default = Scenario::preset(profile.clone(), domain);
    let solvers: Vec<Solver> = r.list("solvers", "run")?.unwrap_or(default.solvers.clone());
    if solvers.is_empty() {
        return Err(invalid("solvers.run", r.line("solvers", "run"), "at least one solver is required"));
    }
    for s in &solvers {
        let wrong = match s {
            Solver::SpectralLocal | Solver::SpectralGlobal => !domain.is_bounded(),
            Solver::GreensLocal | Solver::GreensGlobal => domain.is_bounded(),
            _ => false,
        };
        if wrong {
            return Err(invalid(
                "solvers.run",
                r.line("solvers", "run"),
                format!("`{s}` does not apply to a {} domain", if domain.is_bounded() { "bounded" } else { "unbounded" }),
            ));
        }
    }
    let modes = r.or("solvers", "modes", DEFAULT_MODES)?;
    let basis = match r.or("solvers", "basis", "full_neumann".to_string())?.as_str() {
        "full_neumann" => CosineBasis::FullNeumann,
        "paper_even" => CosineBasis::PaperEven,
        other => {
            return Err(invalid(
                "solvers.basis",
                r.line("solvers", "basis"),
                format!("expected full_neumann or paper_even, got `{other}`"),
            ))
        }
    };
    let mc_seed = r.or("solvers", "mc_seed", 0u64)?;
    let kernel = match r.or("solvers", "kernel", "gauss_hermite".to_string())?.as_str() {
        "gauss_hermite" => KernelMethod::GaussHermite {
            order: r.or("solvers", "kernel_order", 64usize)?,
        },
        "adaptive" => KernelMethod::Adaptive {
            tol: r.or("solvers", "kernel_tol", 1e-10)?,
        },
        "monte_carlo" => KernelMethod::MonteCarlo {
            samples: r.or("solvers", "mc_samples", 100_000usize)?,
            seed: mc_seed,
        },
        other => {
            return Err(invalid(
                "solvers.kernel",
                r.line("solvers", "kernel"),
                format!("expected gauss_hermite, adaptive or monte_carlo, got `{other}`"),
            ))
        }
    };
    let sweep = SweepConfig {
        relaxation: r.or("solvers", "sweep_relaxation", default.sweep.relaxation)?,
        max_iters: r.or("solvers", "sweep_max_iters", default.sweep.max_iters)?,
        tol: r.or("solvers", "sweep_tol", default.sweep.tol)?,
    };
    sweep
        .validate()
        .map_err(|e| invalid("solvers", r.line("solvers", "sweep_relaxation"), e))?;

    let checks = r.list("checks", "run")?.unwrap_or(default.checks.clone());
    let horizons = r.list("checks", "horizons")?.unwrap_or(default.horizons.clone());
    if horizons.iter().any(|h: &f64| !(h.is_finite() && *h > 0.0)) {
        return Err(invalid("checks.horizons", r.line("checks", "horizons"), "horizons must be positive"));
    }
    let cleanup_tax = r.opt("checks", "cleanup_tax")?;

    let out_dir = PathBuf::from(r.or("output", "dir", "out".to_string())?);
    let name = r.or("scenario", "name", String::new())?;

    if let Some((field, line)) = r.unused() {
        return Err(invalid(&field, Some(line), "unknown field"));
    }
    Ok(Scenario {
        name,
        params,
        domain,
        profile,
        nx,
        nt,
        solvers,
        checks,
        horizons,
        cleanup_tax,
        modes,
        basis,
        kernel,
        sweep,
        mc_seed,
        out_dir,
    })
}
