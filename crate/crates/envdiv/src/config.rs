//! Experiment configuration files.
//!
//! A config is a TOML document with a `[domain]` table selecting the level
//! generator and an optional `[run]` table. The run table is layered over
//! the domain's preset, so it only needs the keys that differ:
//!
//! ```toml
//! samples = "alchemy_samples.csv"   # optional downstream feature samples
//!
//! [domain]
//! kind = "alchemy"
//! trials = 3
//!
//! [run]
//! stage1_iters = 20000
//! stage2_iters = 10000
//! seed = 1
//!
//! [run.emitters]
//! mutation_rate = 0.05
//! ```
//!
//! Keys under `[run]` mirror the fields of [`RunConfig`]; unknown keys are
//! rejected. Dimension lists (`stage1_dims`, `stage2_dims`) replace the
//! preset's list as a whole.

use std::path::{Path, PathBuf};

use envdiv_core::domain::alchemy::{Alchemy, AlchemyConfig};
use envdiv_core::domain::racing::{Racing, RacingConfig};
use envdiv_core::domain::GridNav;
use envdiv_core::RunConfig;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{CliError, Result};

fn default_grid() -> u32 {
    11
}
fn default_gridnav_k() -> u32 {
    24
}
fn default_alchemy_k() -> usize {
    AlchemyConfig::default().k
}
fn default_stones() -> usize {
    AlchemyConfig::default().stones
}
fn default_trials() -> usize {
    AlchemyConfig::default().trials
}
fn default_control_points() -> usize {
    RacingConfig::default().control_points
}
fn default_racing_k() -> usize {
    RacingConfig::default().k
}
fn default_samples_per_segment() -> usize {
    RacingConfig::default().samples_per_segment
}
fn default_std_threshold() -> f64 {
    RacingConfig::default().std_threshold
}
fn default_significant_turn() -> f64 {
    RacingConfig::default().significant_turn
}

/// Level generator and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Gridnav {
        #[serde(default = "default_grid")]
        grid: u32,
        #[serde(default = "default_gridnav_k")]
        k: u32,
    },
    Alchemy {
        #[serde(default = "default_alchemy_k")]
        k: usize,
        #[serde(default = "default_stones")]
        stones: usize,
        #[serde(default = "default_trials")]
        trials: usize,
    },
    Racing {
        #[serde(default = "default_control_points")]
        control_points: usize,
        #[serde(default = "default_racing_k")]
        k: usize,
        #[serde(default = "default_samples_per_segment")]
        samples_per_segment: usize,
        #[serde(default = "default_std_threshold")]
        std_threshold: f64,
        #[serde(default = "default_significant_turn")]
        significant_turn: f64,
        /// Use the (TotalAngleChanges, AreaToLengthRatio) archive preset.
        #[serde(default)]
        misspecified: bool,
    },
}

impl DomainConfig {
    pub fn gridnav() -> Self {
        DomainConfig::Gridnav { grid: default_grid(), k: default_gridnav_k() }
    }

    pub fn alchemy() -> Self {
        DomainConfig::Alchemy { k: default_alchemy_k(), stones: default_stones(), trials: default_trials() }
    }

    pub fn racing() -> Self {
        let c = RacingConfig::default();
        DomainConfig::Racing {
            control_points: c.control_points,
            k: c.k,
            samples_per_segment: c.samples_per_segment,
            std_threshold: c.std_threshold,
            significant_turn: c.significant_turn,
            misspecified: false,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DomainConfig::Gridnav { .. } => "gridnav",
            DomainConfig::Alchemy { .. } => "alchemy",
            DomainConfig::Racing { .. } => "racing",
        }
    }

    /// Run settings the domain ships with.
    pub fn preset(&self) -> RunConfig {
        match self {
            DomainConfig::Gridnav { grid, .. } => RunConfig::gridnav(*grid),
            DomainConfig::Alchemy { .. } => RunConfig::alchemy(),
            DomainConfig::Racing { misspecified: false, .. } => RunConfig::racing(),
            DomainConfig::Racing { misspecified: true, .. } => RunConfig::racing_misspecified(),
        }
    }

    pub fn build(&self) -> Result<AnyDomain> {
        Ok(match *self {
            DomainConfig::Gridnav { grid, k } => AnyDomain::GridNav(GridNav::new(grid, k)?),
            DomainConfig::Alchemy { k, stones, trials } => AnyDomain::Alchemy(Alchemy::new(AlchemyConfig { k, stones, trials })?),
            DomainConfig::Racing { control_points, k, samples_per_segment, std_threshold, significant_turn, .. } => {
                AnyDomain::Racing(Racing::new(RacingConfig {
                    control_points,
                    k,
                    samples_per_segment,
                    std_threshold,
                    significant_turn,
                })?)
            }
        })
    }
}

/// A constructed domain of any supported kind.
#[derive(Debug, Clone)]
pub enum AnyDomain {
    GridNav(GridNav),
    Alchemy(Alchemy),
    Racing(Racing),
}

/// Runs `$body` with `$d` bound to the concrete domain inside an [`AnyDomain`].
#[macro_export]
macro_rules! with_domain {
    ($any:expr, $d:ident => $body:expr) => {
        match $any {
            $crate::config::AnyDomain::GridNav($d) => $body,
            $crate::config::AnyDomain::Alchemy($d) => $body,
            $crate::config::AnyDomain::Racing($d) => $body,
        }
    };
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub domain: DomainConfig,
    pub run: RunConfig,
    /// Downstream feature samples; drawn from the domain when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<PathBuf>,
}

impl Experiment {
    /// The domain's preset run settings, unchanged.
    pub fn preset(domain: DomainConfig) -> Self {
        let run = domain.preset();
        Experiment { domain, run, samples: None }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut exp = Self::from_toml(&text)?;
        // Relative sample paths are resolved against the config's directory.
        if let (Some(s), Some(dir)) = (&exp.samples, path.parent()) {
            if s.is_relative() {
                exp.samples = Some(dir.join(s));
            }
        }
        Ok(exp)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let doc: Table = text.parse().map_err(|e: toml::de::Error| CliError::config(e.message().to_string()))?;
        Self::from_table(doc)
    }

    /// Resolves a parsed document: unknown top-level keys are errors, the
    /// `[run]` table is merged over the domain preset.
    pub fn from_table(mut doc: Table) -> Result<Self> {
        for key in doc.keys() {
            if !matches!(key.as_str(), "domain" | "run" | "samples") {
                return Err(CliError::config(format!("unknown top-level key `{key}`")));
            }
        }
        let domain: DomainConfig = doc
            .remove("domain")
            .ok_or_else(|| CliError::config("missing [domain] table"))?
            .try_into()
            .map_err(|e: toml::de::Error| CliError::config(format!("[domain]: {}", e.message())))?;
        let mut run = to_table(&domain.preset())?;
        if let Some(overrides) = doc.remove("run") {
            let Value::Table(overrides) = overrides else {
                return Err(CliError::config("`run` must be a table"));
            };
            merge(&mut run, overrides, "run")?;
        }
        let run: RunConfig = Value::Table(run)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::config(format!("[run]: {}", e.message())))?;
        run.validate()?;
        let samples = match doc.remove("samples") {
            None => None,
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(_) => return Err(CliError::config("`samples` must be a path string")),
        };
        Ok(Experiment { domain, run, samples })
    }

    /// The experiment as a TOML document (the inverse of [`Self::from_table`]).
    pub fn to_table(&self) -> Result<Table> {
        to_table(self)
    }

    /// Copy with one setting replaced. `key` is a sweep axis: an alias
    /// (`p_me`, `n_samples`, `budget`, `seed`), a dotted path below `run`
    /// (`emitters.mutation_rate`), or a path below `domain` (`domain.k`).
    pub fn with_setting(&self, key: &str, value: &Value) -> Result<Self> {
        let mut doc = self.to_table()?;
        for path in axis_paths(key) {
            set_path(&mut doc, &path, value.clone())
                .map_err(|e| CliError::config(format!("invalid sweep axis `{key}`: {e}")))?;
        }
        Self::from_table(doc)
    }
}

fn to_table<T: Serialize>(value: &T) -> Result<Table> {
    match Value::try_from(value) {
        Ok(Value::Table(t)) => Ok(t),
        Ok(_) => Err(CliError::config("expected a table")),
        Err(e) => Err(CliError::config(e.to_string())),
    }
}

/// Recursively layers `over` onto `base`; keys missing from `base` are
/// errors except inside arrays, which are replaced whole.
fn merge(base: &mut Table, over: Table, at: &str) -> Result<()> {
    for (key, value) in over {
        let path = format!("{at}.{key}");
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o, &path)?,
            (Some(slot), v) => *slot = v,
            (None, _) => return Err(CliError::config(format!("unknown key `{path}`"))),
        }
    }
    Ok(())
}

fn axis_paths(key: &str) -> Vec<Vec<String>> {
    let split = |s: &str| s.split('.').map(str::to_string).collect::<Vec<_>>();
    match key {
        "p_me" | "mutation_rate" => vec![split("run.emitters.mutation_rate")],
        "n_samples" => vec![split("run.target_samples")],
        "budget" => vec![split("run.stage1_iters"), split("run.stage2_iters")],
        k if k.starts_with("domain.") || k.starts_with("run.") => vec![split(k)],
        k => vec![split(&format!("run.{k}"))],
    }
}

fn set_path(doc: &mut Table, path: &[String], value: Value) -> std::result::Result<(), String> {
    let (last, parents) = path.split_last().ok_or("empty key")?;
    let mut cur = doc;
    for p in parents {
        cur = match cur.get_mut(p) {
            Some(Value::Table(t)) => t,
            _ => return Err(format!("no table `{p}`")),
        };
    }
    match cur.get_mut(last) {
        Some(slot) => {
            *slot = value;
            Ok(())
        }
        // Domain parameters left at their defaults are not serialized away,
        // so any missing key is unknown.
        None => Err(format!("no setting `{last}`")),
    }
}

/// A parsed `--sweep axis=v1,v2,...` argument.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<Value>,
}

impl SweepAxis {
    pub fn parse(spec: &str) -> Result<Self> {
        let (key, list) = spec
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("sweep `{spec}` is not of the form axis=v1,v2,...")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::config("sweep axis name is empty"));
        }
        let values = list
            .split(',')
            .map(|raw| parse_scalar(raw.trim()))
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() {
            return Err(CliError::config("sweep needs at least one value"));
        }
        Ok(SweepAxis { key: key.to_string(), values })
    }
}

/// A TOML scalar; bare words that are not numbers or booleans are strings.
fn parse_scalar(raw: &str) -> Result<Value> {
    if raw.is_empty() {
        return Err(CliError::config("empty sweep value"));
    }
    let doc: std::result::Result<Table, _> = format!("v = {raw}").parse();
    Ok(match doc.ok().and_then(|mut t| t.remove("v")) {
        Some(v) => v,
        None => Value::String(raw.to_string()),
    })
}

/// Short display of a sweep value.
pub fn value_label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
