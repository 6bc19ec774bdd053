//! Run configuration: presets, `key = value` files and `--key value` flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nonrecip::momentum::dissipationless_mode;
use nonrecip::{LeadConfig, Model, ModelParams};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Spectral,
    ScalingFactors,
    Transmission,
    CurrentScan,
    Ndqpt,
    MarkovianCompare,
    Validate,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Spectral,
        Experiment::ScalingFactors,
        Experiment::Transmission,
        Experiment::CurrentScan,
        Experiment::Ndqpt,
        Experiment::MarkovianCompare,
        Experiment::Validate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectral => "spectral",
            Experiment::ScalingFactors => "scaling-factors",
            Experiment::Transmission => "transmission",
            Experiment::CurrentScan => "current-scan",
            Experiment::Ndqpt => "ndqpt",
            Experiment::MarkovianCompare => "markovian-compare",
            Experiment::Validate => "validate",
        }
    }
}

impl FromStr for Experiment {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig2a,
    Fig2b,
    Fig2c,
    Fig2d,
    Fig2e,
    Fig2f,
    Fig3,
}

impl Preset {
    pub const ALL: [Preset; 7] = [Preset::Fig2a, Preset::Fig2b, Preset::Fig2c, Preset::Fig2d, Preset::Fig2e, Preset::Fig2f, Preset::Fig3];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2a => "fig2a",
            Preset::Fig2b => "fig2b",
            Preset::Fig2c => "fig2c",
            Preset::Fig2d => "fig2d",
            Preset::Fig2e => "fig2e",
            Preset::Fig2f => "fig2f",
            Preset::Fig3 => "fig3",
        }
    }
}

impl FromStr for Preset {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or(())
    }
}

/// Which self-energy the chain sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bath {
    NonMarkovian,
    /// Γ frozen to a constant.
    Markovian,
}

/// Independent variable of a current scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scan {
    N,
    MuD,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub preset: Option<Preset>,
    pub params: ModelParams,
    pub bath: Bath,
    /// Frozen loss rate of the Markovian model; `None` means g_b²/g.
    pub gamma_m: Option<f64>,
    pub mu_d: f64,
    pub scan: Scan,
    pub n_values: Vec<usize>,
    pub mu_min: f64,
    pub mu_max: f64,
    pub mu_points: usize,
    pub k_points: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_points: usize,
    pub eta: f64,
    pub rtol: f64,
    pub trials: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn new(experiment: Experiment, preset: Option<Preset>) -> Self {
        let params = ModelParams::default();
        let ws = dissipationless_mode(&params).omega_star;
        let mut cfg = Self {
            experiment,
            preset,
            params,
            bath: Bath::NonMarkovian,
            gamma_m: None,
            mu_d: ws + 0.1,
            scan: Scan::N,
            n_values: vec![128, 256, 512, 1024, 2048, 4096],
            mu_min: params.delta_c - 2.0,
            mu_max: params.delta_c + 2.0,
            mu_points: 81,
            k_points: 401,
            omega_min: params.delta_c - 3.0,
            omega_max: params.delta_c + 3.0,
            omega_points: 801,
            eta: 0.0,
            rtol: 1e-8,
            trials: 20,
            seed: 0,
            output_dir: PathBuf::from("."),
        };
        match preset {
            None | Some(Preset::Fig2a) | Some(Preset::Fig2c) | Some(Preset::Fig2e) => {}
            Some(Preset::Fig2b) => cfg.bath = Bath::Markovian,
            Some(Preset::Fig2d) => cfg.params = ModelParams::blocking(),
            Some(Preset::Fig2f) => {
                cfg.params.n_sites = 1024;
                cfg.scan = Scan::MuD;
                cfg.mu_min = ws - 0.4;
                cfg.mu_max = ws + 0.4;
                cfg.mu_points = 81;
            }
            Some(Preset::Fig3) => {
                cfg.bath = Bath::Markovian;
                cfg.params.beta = 10.0;
                cfg.mu_d = ws;
                cfg.n_values = (1..=8).map(|i| 8 * i).collect();
            }
        }
        cfg
    }

    pub fn model(&self) -> Model {
        match self.bath {
            Bath::NonMarkovian => Model::non_markovian(self.params),
            Bath::Markovian => Model::markovian_with(self.params, self.markovian_rate()),
        }
    }

    pub fn markovian_rate(&self) -> f64 {
        self.gamma_m.unwrap_or_else(|| self.params.markovian_gamma())
    }

    pub fn leads(&self) -> LeadConfig {
        LeadConfig::from_params(&self.params)
    }

    /// Every settable key with its current value, in a form [`parse_pairs`]
    /// reads back unchanged.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        let join = |v: &[usize]| v.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",");
        vec![
            ("g", p.g.to_string()),
            ("g_b", p.g_b.to_string()),
            ("phi", p.phi.to_string()),
            ("delta_c", p.delta_c.to_string()),
            ("delta_b", p.delta_b.to_string()),
            ("kappa", p.kappa.to_string()),
            ("gamma", p.gamma.to_string()),
            ("n", p.n_sites.to_string()),
            ("beta", p.beta.to_string()),
            ("bath", match self.bath {
                Bath::NonMarkovian => "non_markovian".into(),
                Bath::Markovian => "markovian".into(),
            }),
            ("gamma_m", self.gamma_m.map_or_else(|| "auto".into(), |v| v.to_string())),
            ("mu_d", self.mu_d.to_string()),
            ("scan", match self.scan {
                Scan::N => "n".into(),
                Scan::MuD => "mu_d".into(),
            }),
            ("n_values", join(&self.n_values)),
            ("mu_min", self.mu_min.to_string()),
            ("mu_max", self.mu_max.to_string()),
            ("mu_points", self.mu_points.to_string()),
            ("k_points", self.k_points.to_string()),
            ("omega_min", self.omega_min.to_string()),
            ("omega_max", self.omega_max.to_string()),
            ("omega_points", self.omega_points.to_string()),
            ("eta", self.eta.to_string()),
            ("rtol", self.rtol.to_string()),
            ("trials", self.trials.to_string()),
            ("seed", self.seed.to_string()),
            ("output", self.output_dir.display().to_string()),
        ]
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let p = &mut self.params;
        match key {
            "g" => p.g = real(key, value)?,
            "g_b" => p.g_b = real(key, value)?,
            "phi" => p.phi = real(key, value)?,
            "delta_c" => p.delta_c = real(key, value)?,
            "delta_b" => p.delta_b = real(key, value)?,
            "kappa" => p.kappa = real(key, value)?,
            "gamma" => p.gamma = real(key, value)?,
            "n" => p.n_sites = parse(key, value)?,
            "beta" => p.beta = real(key, value)?,
            "bath" => {
                self.bath = match value {
                    "non_markovian" => Bath::NonMarkovian,
                    "markovian" => Bath::Markovian,
                    _ => return Err(bad(key, value, "expected non_markovian or markovian")),
                }
            }
            "gamma_m" => self.gamma_m = if value == "auto" { None } else { Some(real(key, value)?) },
            "mu_d" => self.mu_d = real(key, value)?,
            "scan" => {
                self.scan = match value {
                    "n" => Scan::N,
                    "mu_d" => Scan::MuD,
                    _ => return Err(bad(key, value, "expected n or mu_d")),
                }
            }
            "n_values" => {
                self.n_values = value.split(',').map(|v| parse(key, v.trim())).collect::<Result<_, _>>()?;
            }
            "mu_min" => self.mu_min = real(key, value)?,
            "mu_max" => self.mu_max = real(key, value)?,
            "mu_points" => self.mu_points = parse(key, value)?,
            "k_points" => self.k_points = parse(key, value)?,
            "omega_min" => self.omega_min = real(key, value)?,
            "omega_max" => self.omega_max = real(key, value)?,
            "omega_points" => self.omega_points = parse(key, value)?,
            "eta" => self.eta = real(key, value)?,
            "rtol" => self.rtol = real(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "output" => self.output_dir = PathBuf::from(value),
            _ => return Err(CliError::Usage(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        if let Err(nonrecip::Error::InvalidParameter { name, reason }) = self.params.validate() {
            let key = if name == "n_sites" { "n" } else { name };
            return Err(CliError::Usage(format!("invalid value for '{key}': {reason}")));
        }
        let check = |ok: bool, key: &str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(CliError::Usage(format!("invalid value for '{key}': {reason}")))
            }
        };
        check(self.gamma_m.is_none_or(|v| v >= 0.0), "gamma_m", "must be non-negative")?;
        check(!self.n_values.is_empty() && self.n_values.iter().all(|n| *n >= 2), "n_values", "sizes must be at least 2")?;
        check(self.mu_points >= 2 && self.mu_min < self.mu_max, "mu_points", "need at least 2 points and mu_min < mu_max")?;
        check(self.k_points >= 2, "k_points", "need at least 2 points")?;
        check(self.omega_points >= 2 && self.omega_min < self.omega_max, "omega_points", "need at least 2 points and omega_min < omega_max")?;
        check(self.eta >= 0.0, "eta", "must be non-negative")?;
        check(self.rtol > 0.0 && self.rtol < 1.0, "rtol", "must lie in (0, 1)")?;
        check(self.trials >= 1, "trials", "must be at least 1")?;
        if self.experiment == Experiment::Ndqpt {
            check(self.params.n_sites >= nonrecip::analysis::MIN_NDQPT_SITES, "n", "ndqpt needs n >= 64")?;
        }
        if matches!(self.experiment, Experiment::CurrentScan | Experiment::MarkovianCompare | Experiment::Transmission) {
            check(self.params.gamma > 0.0, "gamma", "currents need a positive lead coupling")?;
        }
        Ok(())
    }
}

fn bad(key: &str, value: &str, why: &str) -> CliError {
    CliError::Usage(format!("invalid value '{value}' for '{key}': {why}"))
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e: T::Err| bad(key, value, &e.to_string()))
}

fn real(key: &str, value: &str) -> Result<f64, CliError> {
    let v: f64 = parse(key, value)?;
    if v.is_nan() {
        return Err(bad(key, value, "not a number"));
    }
    Ok(v)
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{}:{}: expected 'key = value'", path.display(), i + 1)))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Builds a config from ordered pairs; `preset` is applied first, later pairs
/// override earlier ones.
pub fn parse_pairs(experiment: Experiment, pairs: &[(String, String)]) -> Result<RunConfig, CliError> {
    let mut preset = None;
    for (k, v) in pairs {
        if k == "preset" {
            preset = Some(v.parse::<Preset>().map_err(|_| bad("preset", v, "expected fig2a..fig2f or fig3"))?);
        }
    }
    let mut cfg = RunConfig::new(experiment, preset);
    for (k, v) in pairs.iter().filter(|(k, _)| k != "preset") {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub enum Command {
    Help,
    Run(RunConfig),
}

/// Parses `argv` (without the program name).
pub fn parse_config(argv: &[String]) -> Result<Command, CliError> {
    let Some(first) = argv.first() else {
        return Ok(Command::Help);
    };
    if first == "-h" || first == "--help" || first == "help" {
        return Ok(Command::Help);
    }
    let experiment: Experiment = first.parse().map_err(|_| CliError::Usage(format!("unknown experiment '{first}'")))?;
    let mut flags = Vec::new();
    let mut rest = argv[1..].iter();
    while let Some(arg) = rest.next() {
        if arg == "-h" || arg == "--help" {
            return Ok(Command::Help);
        }
        let Some(body) = arg.strip_prefix("--") else {
            return Err(CliError::Usage(format!("unexpected argument '{arg}'")));
        };
        let (key, value) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = rest.next().ok_or_else(|| CliError::Usage(format!("missing value for '{body}'")))?;
                (body.to_string(), v.clone())
            }
        };
        flags.push((key.replace('-', "_"), value));
    }
    let mut pairs = Vec::new();
    if let Some((_, path)) = flags.iter().rev().find(|(k, _)| k == "config") {
        pairs = read_config_file(Path::new(path))?;
        if pairs.iter().any(|(k, _)| k == "config") {
            return Err(CliError::Usage("key 'config' is not allowed inside a config file".into()));
        }
    }
    // A preset given on the command line replaces one from the file.
    if flags.iter().any(|(k, _)| k == "preset") {
        pairs.retain(|(k, _)| k != "preset");
    }
    pairs.extend(flags.into_iter().filter(|(k, _)| k != "config"));
    parse_pairs(experiment, &pairs).map(Command::Run)
}

/// Reads back the `parameters` object of a manifest.
pub fn config_from_manifest(manifest: &serde_json::Value) -> Result<RunConfig, CliError> {
    let experiment = manifest["experiment"]
        .as_str()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::Usage("manifest has no valid 'experiment'".into()))?;
    let params: BTreeMap<String, String> = serde_json::from_value(manifest["parameters"].clone())
        .map_err(|e| CliError::Usage(format!("manifest 'parameters': {e}")))?;
    let mut pairs: Vec<(String, String)> = params.into_iter().collect();
    if let Some(p) = manifest["preset"].as_str() {
        pairs.insert(0, ("preset".into(), p.into()));
    }
    parse_pairs(experiment, &pairs)
}

pub const USAGE: &str = "\
usage: nonrecip <experiment> [--preset NAME] [--config FILE] [--key value]...

experiments:
  spectral           A(k, omega) on a k x omega grid
  scaling-factors    f+(omega), f-(omega) of the bulk transfer matrix
  transmission       tau+(omega), tau-(omega) and the reciprocal reference
  current-scan       I+ and I- versus N (--scan n) or mu_d (--scan mu_d)
  ndqpt              sqrt(N) I+(mu_d) on a drive grid
  markovian-compare  Lyapunov and Green's-function currents of the frozen model
  validate           randomized oracle checks; exits 1 on any failure

presets: fig2a fig2b fig2c fig2d fig2e fig2f fig3

keys (energies in units of g):
  g g_b phi delta_c delta_b kappa gamma n beta
  bath (non_markovian|markovian)  gamma_m (auto|value)
  mu_d  scan (n|mu_d)  n_values (comma list)  mu_min mu_max mu_points
  k_points omega_min omega_max omega_points eta rtol
  trials seed output

A config file holds 'key = value' lines with '#' comments; flags override it.
NONRECIP_THREADS caps the worker count.
Exit codes: 0 ok, 1 numerical failure, 2 bad configuration, 3 I/O error.
";
