//! Experiment configuration: `key=value` files merged with command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use odd_walk::{
    lambda_for_duration, BoundaryKind, DisorderSpec, FitWindow, ProbabilityConvention, ProtocolKind, ProtocolSpec,
    Schedule,
};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<odd_walk::Error> for ConfigError {
    fn from(e: odd_walk::Error) -> Self {
        ConfigError(e.to_string())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Dos,
    Correlation,
    Adiabatic,
    Modes,
    Gap,
    Lyapunov,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::Dos, Command::Correlation, Command::Adiabatic, Command::Modes, Command::Gap, Command::Lyapunov];

    pub fn name(self) -> &'static str {
        match self {
            Command::Dos => "dos",
            Command::Correlation => "correlation",
            Command::Adiabatic => "adiabatic",
            Command::Modes => "modes",
            Command::Gap => "gap",
            Command::Lyapunov => "lyapunov",
        }
    }
}

impl FromStr for Command {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| ConfigError(format!("unknown command '{s}'")))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Source {
    Exact,
    Adiabatic,
    Both,
}

impl FromStr for Source {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s.trim() {
            "exact" => Ok(Source::Exact),
            "adiabatic" => Ok(Source::Adiabatic),
            "both" => Ok(Source::Both),
            other => Err(ConfigError(format!("unknown source '{other}' (exact, adiabatic, both)"))),
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Exact => "exact",
            Source::Adiabatic => "adiabatic",
            Source::Both => "both",
        })
    }
}

/// Every key a config file or manifest may carry.
pub const KEYS: &[&str] = &[
    "command",
    "n",
    "delta",
    "theta_mean",
    "seed",
    "realizations",
    "boundary",
    "protocol",
    "T",
    "lambda",
    "window",
    "threads",
    "out",
    "source",
    "convention",
    "omega",
    "fit_lo",
    "fit_hi",
    "points",
    "grid",
];

/// A fully resolved run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub n: usize,
    pub delta: f64,
    pub theta_mean: f64,
    pub seed: u64,
    pub realizations: usize,
    pub boundary: BoundaryKind,
    pub protocol: ProtocolKind,
    pub total_time: usize,
    pub lambda: f64,
    pub window: FitWindow,
    /// `0` lets the worker pool pick.
    pub threads: usize,
    pub out: PathBuf,
    pub source: Source,
    pub convention: ProbabilityConvention,
    pub omegas: Vec<f64>,
    pub fit_lo: f64,
    pub fit_hi: f64,
    pub points: usize,
    /// Frequency grid of the ensemble density estimate, used by `dos` with more than one realization.
    pub grid: Vec<f64>,
}

fn parse<T: FromStr>(map: &BTreeMap<String, String>, key: &str, default: T) -> Result<T, ConfigError> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v.trim().parse().map_err(|_| ConfigError(format!("invalid value '{v}' for {key}"))),
    }
}

fn parse_list(map: &BTreeMap<String, String>, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
    match map.get(key) {
        None => Ok(default.to_vec()),
        Some(v) if v.trim().is_empty() => Ok(Vec::new()),
        Some(v) => v
            .split(',')
            .map(|x| x.trim().parse().map_err(|_| ConfigError(format!("invalid value '{x}' in {key}"))))
            .collect(),
    }
}

fn format_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")
}

/// Geometric grid `1e-5 … 1e-2` with ratio `√2`.
fn default_grid() -> Vec<f64> {
    (0..=20).map(|k| 1e-5 * std::f64::consts::SQRT_2.powi(k)).collect()
}

impl ExperimentConfig {
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        if let Some(bad) = map.keys().find(|k| !KEYS.contains(&k.as_str()) && k.as_str() != "version") {
            return Err(ConfigError(format!("unknown config key '{bad}'")));
        }
        let command: Command = map.get("command").ok_or_else(|| ConfigError("no command given".into()))?.parse()?;
        let (n, delta, theta_mean, seed, realizations) = match command {
            Command::Dos => (30_000, 0.8, 0.0, 7, 1),
            Command::Correlation => (200, 0.4, 0.0, 1, 1000),
            Command::Adiabatic => (18, 0.7, 0.0, 1, 50),
            Command::Modes => (20, 1.0, 0.3, 1, 100),
            Command::Gap => (200, 0.4, 0.0, 1, 100),
            Command::Lyapunov => (1_000_000, 0.4, 0.0, 5, 1),
        };
        let total_time = parse(map, "T", 90)?;
        let boundary = match map.get("boundary") {
            None => BoundaryKind::standard(),
            Some(b) => b.parse()?,
        };
        let window = match map.get("window") {
            None => FitWindow::default(),
            Some(w) => w.parse()?,
        };
        let protocol = match map.get("protocol") {
            None => ProtocolKind::Exponential,
            Some(p) => p.parse()?,
        };
        let convention = match map.get("convention") {
            None => ProbabilityConvention::PerSite,
            Some(c) => c.parse()?,
        };
        let cfg = ExperimentConfig {
            command,
            n: parse(map, "n", n)?,
            delta: parse(map, "delta", delta)?,
            theta_mean: parse(map, "theta_mean", theta_mean)?,
            seed: parse(map, "seed", seed)?,
            realizations: parse(map, "realizations", realizations)?,
            boundary,
            protocol,
            total_time,
            lambda: parse(map, "lambda", lambda_for_duration(total_time.max(1)))?,
            window,
            threads: parse(map, "threads", 0)?,
            out: parse(map, "out", PathBuf::from("out"))?,
            source: parse(map, "source", Source::Exact)?,
            convention,
            omegas: parse_list(map, "omega", &[1e-3])?,
            fit_lo: parse(map, "fit_lo", 1.0)?,
            fit_hi: parse(map, "fit_hi", 2.0)?,
            points: parse(map, "points", 41)?,
            grid: parse_list(map, "grid", &default_grid())?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn disorder(&self) -> DisorderSpec {
        DisorderSpec::new(self.n, self.theta_mean, self.delta, self.seed)
    }

    pub fn schedule(&self) -> Schedule {
        Schedule { kind: self.protocol, total_time: self.total_time, lambda: self.lambda }
    }

    pub fn protocol_spec(&self) -> ProtocolSpec {
        self.schedule().protocol(self.disorder())
    }

    fn needs_standard_boundary(&self) -> bool {
        matches!(self.command, Command::Correlation | Command::Adiabatic | Command::Gap)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.disorder().validate()?;
        if self.realizations == 0 {
            return Err(ConfigError("realizations must be positive".into()));
        }
        if self.needs_standard_boundary() && self.boundary != BoundaryKind::standard() {
            return Err(ConfigError(format!(
                "{} runs with boundary {}, got {}",
                self.command.name(),
                BoundaryKind::standard(),
                self.boundary
            )));
        }
        let uses_protocol = self.command == Command::Adiabatic
            || (self.command == Command::Correlation && self.source != Source::Exact);
        if uses_protocol {
            self.protocol_spec().validate()?;
        }
        match self.command {
            Command::Dos if !(self.fit_lo < self.fit_hi) || self.points < 2 => {
                Err(ConfigError(format!("fit window [{}, {}] with {} points", self.fit_lo, self.fit_hi, self.points)))
            }
            Command::Lyapunov if self.omegas.is_empty() || self.omegas.iter().any(|w| !w.is_finite()) => {
                Err(ConfigError("lyapunov needs at least one finite omega".into()))
            }
            Command::Modes if self.n < 2 => Err(ConfigError("modes needs n >= 2".into())),
            _ => Ok(()),
        }
    }

    /// Every parameter as `key=value` lines, in [`KEYS`] order, followed by the version.
    pub fn manifest(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            let v = match *key {
                "command" => self.command.name().to_string(),
                "n" => self.n.to_string(),
                "delta" => format!("{:e}", self.delta),
                "theta_mean" => format!("{:e}", self.theta_mean),
                "seed" => self.seed.to_string(),
                "realizations" => self.realizations.to_string(),
                "boundary" => self.boundary.to_string(),
                "protocol" => self.protocol.to_string(),
                "T" => self.total_time.to_string(),
                "lambda" => format!("{:e}", self.lambda),
                "window" => self.window.to_string(),
                "threads" => self.threads.to_string(),
                "out" => self.out.display().to_string(),
                "source" => self.source.to_string(),
                "convention" => self.convention.to_string(),
                "omega" => format_list(&self.omegas),
                "fit_lo" => format!("{:e}", self.fit_lo),
                "fit_hi" => format!("{:e}", self.fit_hi),
                "points" => self.points.to_string(),
                "grid" => format_list(&self.grid),
                _ => unreachable!(),
            };
            s.push_str(&format!("{key}={v}\n"));
        }
        s.push_str(&format!("version={}\n", odd_walk::VERSION));
        s
    }
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {}: expected key=value, got '{line}'", i + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn manifest_round_trips() {
        let cfg = ExperimentConfig::from_map(&map(&[
            ("command", "correlation"),
            ("delta", "0.37"),
            ("source", "both"),
            ("window", "2-9"),
            ("n", "10"),
        ]))
        .unwrap();
        let again = ExperimentConfig::from_map(&parse_kv(&cfg.manifest()).unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn lambda_follows_duration() {
        let cfg = ExperimentConfig::from_map(&map(&[("command", "adiabatic"), ("T", "180")])).unwrap();
        assert_eq!(cfg.lambda, lambda_for_duration(180));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_map(&map(&[("command", "dos"), ("n", "-3")])).is_err());
        assert!(ExperimentConfig::from_map(&map(&[("command", "gap"), ("boundary", "++")])).is_err());
        assert!(ExperimentConfig::from_map(&map(&[("command", "dos"), ("colour", "red")])).is_err());
        assert!(ExperimentConfig::from_map(&map(&[("command", "adiabatic"), ("n", "1")])).is_err());
        assert!(parse_kv("no equals sign").is_err());
    }
}
