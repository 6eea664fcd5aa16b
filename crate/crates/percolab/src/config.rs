//! Experiment configuration: a flat TOML file, overridden key by key by
//! command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::default_workers;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Invade,
    Crossing,
    Corrlen,
    Onearm,
    IicNu,
    Certificate,
    Gap,
    BoxGap,
    DsvCount,
    Selftest,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::Invade,
        Command::Crossing,
        Command::Corrlen,
        Command::Onearm,
        Command::IicNu,
        Command::Certificate,
        Command::Gap,
        Command::BoxGap,
        Command::DsvCount,
        Command::Selftest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Invade => "invade",
            Command::Crossing => "crossing",
            Command::Corrlen => "corrlen",
            Command::Onearm => "onearm",
            Command::IicNu => "iic-nu",
            Command::Certificate => "certificate",
            Command::Gap => "gap",
            Command::BoxGap => "box-gap",
            Command::DsvCount => "dsv-count",
            Command::Selftest => "selftest",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    #[default]
    Ipc,
    Iic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    #[default]
    Annulus,
    Box,
}

/// Annulus radii `inner:outer`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct WindowSpec {
    pub inner: u32,
    pub outer: u32,
}

impl FromStr for WindowSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("window {s:?} is not of the form inner:outer"))?;
        let inner = a.trim().parse().map_err(|e| format!("window {s:?}: {e}"))?;
        let outer = b.trim().parse().map_err(|e| format!("window {s:?}: {e}"))?;
        Ok(WindowSpec { inner, outer })
    }
}

impl TryFrom<String> for WindowSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<WindowSpec> for String {
    fn from(w: WindowSpec) -> String {
        format!("{}:{}", w.inner, w.outer)
    }
}

/// Every key is optional; unset keys fall back to the defaults of
/// [`ExperimentConfig`]. Flags use the same names with dashes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub command: Option<Command>,
    pub n: Option<u32>,
    pub big_n: Option<u32>,
    pub p: Option<f64>,
    pub epsilon: Option<f64>,
    pub tolerance: Option<f64>,
    pub replicas: Option<u64>,
    pub max_replicas: Option<u64>,
    pub horizon: Option<u32>,
    pub steps: Option<usize>,
    pub burn_in: Option<usize>,
    pub grid: Option<Vec<f64>>,
    pub n_list: Option<Vec<u32>>,
    pub windows: Option<Vec<WindowSpec>>,
    pub source: Option<Source>,
    pub geometry: Option<Geometry>,
    pub checks: Option<u64>,
    pub c_hat: Option<f64>,
    pub confidence: Option<f64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

macro_rules! merge_fields {
    ($into:ident, $from:ident; $($f:ident),*) => {
        $( if $from.$f.is_some() { $into.$f = $from.$f; } )*
    };
}

impl Overrides {
    /// Values set in `other` win.
    pub fn merge(mut self, other: Overrides) -> Overrides {
        merge_fields!(self, other; command, n, big_n, p, epsilon, tolerance, replicas, max_replicas, horizon,
            steps, burn_in, grid, n_list, windows, source, geometry, checks, c_hat, confidence, seed, workers,
            output, format);
        self
    }

    pub fn resolve(self) -> Result<ExperimentConfig, ConfigError> {
        let d = ExperimentConfig::defaults();
        let cfg = ExperimentConfig {
            command: self.command.ok_or(ConfigError::MissingCommand)?,
            n: self.n.unwrap_or(d.n),
            big_n: self.big_n.unwrap_or(d.big_n),
            p: self.p.unwrap_or(d.p),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            replicas: self.replicas.unwrap_or(d.replicas),
            max_replicas: self.max_replicas.unwrap_or(d.max_replicas),
            horizon: self.horizon.unwrap_or(d.horizon),
            steps: self.steps.unwrap_or(d.steps),
            burn_in: self.burn_in.unwrap_or(d.burn_in),
            grid: self.grid.unwrap_or(d.grid),
            n_list: self.n_list.unwrap_or(d.n_list),
            windows: self.windows.unwrap_or(d.windows),
            source: self.source.unwrap_or(d.source),
            geometry: self.geometry.unwrap_or(d.geometry),
            checks: self.checks.unwrap_or(d.checks),
            c_hat: self.c_hat.or(d.c_hat),
            confidence: self.confidence.unwrap_or(d.confidence),
            seed: self.seed.unwrap_or(d.seed),
            workers: self.workers.unwrap_or(d.workers),
            output: self.output.or(d.output),
            format: self.format.unwrap_or(d.format),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A fully resolved experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub n: u32,
    /// Conditioning radius `N`.
    pub big_n: u32,
    pub p: f64,
    pub epsilon: f64,
    pub tolerance: f64,
    pub replicas: u64,
    /// Per-probe replica cap of the `p_n` bisection.
    pub max_replicas: u64,
    pub horizon: u32,
    pub steps: usize,
    pub burn_in: usize,
    /// Certificate levels; empty means the standard grid around `p̂_n`.
    pub grid: Vec<f64>,
    pub n_list: Vec<u32>,
    pub windows: Vec<WindowSpec>,
    pub source: Source,
    pub geometry: Geometry,
    /// Certified fields to cross-check by direct invasion; 0 disables.
    pub checks: u64,
    /// Quasi-multiplicativity constant; measured when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_hat: Option<f64>,
    pub confidence: f64,
    pub seed: u64,
    pub workers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl ExperimentConfig {
    fn defaults() -> ExperimentConfig {
        ExperimentConfig {
            command: Command::Selftest,
            n: 8,
            big_n: 32,
            p: 0.5,
            epsilon: 0.02,
            tolerance: 0.004,
            replicas: 10_000,
            max_replicas: 100_000,
            horizon: 64,
            steps: 100_000,
            burn_in: 10_000,
            grid: Vec::new(),
            n_list: vec![4, 8, 16],
            windows: vec![WindowSpec { inner: 4, outer: 8 }, WindowSpec { inner: 8, outer: 16 }],
            source: Source::Ipc,
            geometry: Geometry::Annulus,
            checks: 0,
            c_hat: None,
            confidence: 0.95,
            seed: 1,
            workers: default_workers(),
            output: None,
            format: Format::Csv,
        }
    }

    /// Defaults for `command`.
    pub fn for_command(command: Command) -> ExperimentConfig {
        ExperimentConfig { command, ..Self::defaults() }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &'static str, reason: &str| Err(ConfigError::Invalid { field, reason: reason.to_string() });
        if !(0.0..=1.0).contains(&self.p) {
            return bad("p", "must lie in [0, 1]");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return bad("epsilon", "must lie in (0, 1/2)");
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return bad("tolerance", "must be positive");
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return bad("confidence", "must lie in (0, 1)");
        }
        if self.replicas == 0 {
            return bad("replicas", "must be at least 1");
        }
        if self.max_replicas == 0 {
            return bad("max_replicas", "must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers", "must be at least 1");
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_list", "must be strictly increasing");
        }
        if self.grid.iter().any(|p| !(0.0..1.0).contains(p)) {
            return bad("grid", "levels must lie in [0, 1)");
        }
        if self.windows.iter().any(|w| w.inner >= w.outer) {
            return bad("windows", "inner radius must be below outer radius");
        }
        if self.c_hat.is_some_and(|c| c.is_nan() || c <= 0.0) {
            return bad("c_hat", "must be positive");
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("no command given")]
    MissingCommand,
}

/// Parse a config file. An empty file is valid.
pub fn read_overrides(path: &Path) -> Result<Overrides, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_overrides(&text).map_err(|message| ConfigError::Parse { path: path.to_path_buf(), message })
}

/// Parse TOML text; errors carry line and column.
pub fn parse_overrides(text: &str) -> Result<Overrides, String> {
    toml::from_str(text).map_err(|e| {
        let location = e.span().map(|span| {
            let line = text[..span.start].matches('\n').count() + 1;
            let col = span.start - text[..span.start].rfind('\n').map_or(0, |i| i + 1) + 1;
            format!("line {line}, column {col}: ")
        });
        format!("{}{}", location.unwrap_or_default(), e.message())
    })
}

/// File values, then flags on top.
pub fn load_config(path: Option<&Path>, flags: Overrides) -> Result<ExperimentConfig, ConfigError> {
    let file = match path {
        Some(p) => read_overrides(p)?,
        None => Overrides::default(),
    };
    file.merge(flags).resolve()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_takes_defaults() {
        let o = parse_overrides("").unwrap();
        let cfg = o.merge(Overrides { command: Some(Command::Crossing), ..Default::default() }).resolve().unwrap();
        assert_eq!(cfg, ExperimentConfig::for_command(Command::Crossing));
    }

    #[test]
    fn flags_win() {
        let file = parse_overrides("command = \"onearm\"\nreplicas = 1000\nn = 4\n").unwrap();
        let cfg = file.merge(Overrides { replicas: Some(10_000), ..Default::default() }).resolve().unwrap();
        assert_eq!(cfg.replicas, 10_000);
        assert_eq!(cfg.n, 4);
        assert_eq!(cfg.command, Command::Onearm);
    }

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::for_command(Command::Gap);
        cfg.grid = vec![0.5, 0.55];
        cfg.c_hat = Some(1.3);
        cfg.output = Some("out.csv".into());
        cfg.windows = vec!["2:4".parse().unwrap()];
        let back = parse_overrides(&cfg.to_toml()).unwrap().resolve().unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn diagnostics_name_the_line() {
        let err = parse_overrides("n = 4\nreplicas = \"many\"\n").unwrap_err();
        assert!(err.starts_with("line 2"), "{err}");
        let err = parse_overrides("bogus = 1\n").unwrap_err();
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn validation() {
        let o = Overrides { command: Some(Command::Corrlen), epsilon: Some(0.7), ..Default::default() };
        assert!(matches!(o.resolve(), Err(ConfigError::Invalid { field: "epsilon", .. })));
        assert!(matches!(Overrides::default().resolve(), Err(ConfigError::MissingCommand)));
    }
}
