//! Run configuration: a TOML document with `[physics]`, `[policy]`,
//! `[sweep]`, `[grid]`, `[output]` and `[oracle]` sections.
//!
//! ```toml
//! order = "first"
//!
//! [physics]
//! lambda = 0.2
//! n_molecules = 2
//!
//! [sweep]
//! variable = "delta_c"
//! start = -0.5
//! stop = 0.5
//! points = 2001
//! unit = "nu"
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{KernelPolicy, ModelParams};
use crate::oracle::OracleSettings;
use crate::spectrum::{uniform_grid, Order};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Transmission,
    Fluorescence,
    Population,
    Polaritons,
    EstimateN,
    OracleCheck,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Transmission,
        Command::Fluorescence,
        Command::Population,
        Command::Polaritons,
        Command::EstimateN,
        Command::OracleCheck,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Transmission => "transmission",
            Command::Fluorescence => "fluorescence",
            Command::Population => "population",
            Command::Polaritons => "polaritons",
            Command::EstimateN => "estimate-n",
            Command::OracleCheck => "oracle-check",
        }
    }

    /// Sweep variable used when the configuration names none.
    pub fn default_variable(&self) -> Variable {
        match self {
            Command::Fluorescence => Variable::Omega,
            Command::Polaritons | Command::EstimateN => Variable::NMolecules,
            _ => Variable::DeltaC,
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown command `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    /// Cavity detuning Δ_c.
    DeltaC,
    /// Emission frequency ω relative to the probe.
    Omega,
    /// Molecule number N.
    NMolecules,
}

impl Variable {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variable::DeltaC => "delta_c",
            Variable::Omega => "omega",
            Variable::NMolecules => "n_molecules",
        }
    }
}

/// Unit of sweep bounds and of the frequency columns written out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    /// Multiples of the electronic decay rate Γ.
    #[default]
    Gamma,
    /// Multiples of the vibrational frequency ν.
    Nu,
}

impl Unit {
    pub fn symbol(&self) -> &'static str {
        match self {
            Unit::Gamma => "Γ",
            Unit::Nu => "ν",
        }
    }

    pub fn scale(&self, params: &ModelParams) -> Result<f64> {
        match self {
            Unit::Gamma => Ok(1.0),
            Unit::Nu if params.nu > 0.0 => Ok(params.nu),
            Unit::Nu => Err(Error::Config("unit = \"nu\" needs physics.nu > 0".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown format `{s}` (csv or json)"))),
        }
    }
}

/// A uniform range or an explicit list of grid values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variable: Option<Variable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    pub unit: Unit,
}

impl GridSpec {
    pub fn range(variable: Variable, start: f64, stop: f64, points: usize, unit: Unit) -> Self {
        Self {
            variable: Some(variable),
            start: Some(start),
            stop: Some(stop),
            points: Some(points),
            values: None,
            unit,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.start.is_none() && self.stop.is_none() && self.points.is_none() && self.values.is_none()
    }

    fn validate(&self, section: &str) -> Result<()> {
        let range = [self.start.is_some(), self.stop.is_some(), self.points.is_some()];
        match (&self.values, range) {
            (Some(v), [false, false, false]) => {
                if v.is_empty() {
                    return Err(Error::Config(format!("{section}.values must not be empty")));
                }
                if v.windows(2).any(|w| w[1] <= w[0]) || v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Config(format!(
                        "{section}.values must be finite and strictly increasing"
                    )));
                }
                Ok(())
            }
            (Some(_), _) => Err(Error::Config(format!(
                "{section}: give either values or start/stop/points, not both"
            ))),
            (None, [true, true, true]) => {
                let (start, stop, points) = (self.start.unwrap(), self.stop.unwrap(), self.points.unwrap());
                if points < 2 {
                    return Err(Error::Config(format!("{section}.points must be at least 2, got {points}")));
                }
                if !(stop > start) {
                    return Err(Error::Config(format!(
                        "{section}.stop must exceed {section}.start ({stop} <= {start})"
                    )));
                }
                Ok(())
            }
            (None, [false, false, false]) => Ok(()),
            (None, _) => Err(Error::Config(format!(
                "{section} needs all of start, stop and points"
            ))),
        }
    }

    /// Grid values in units of Γ.
    pub fn resolve(&self, params: &ModelParams) -> Result<Vec<f64>> {
        let scale = self.unit.scale(params)?;
        let raw = match &self.values {
            Some(v) => v.clone(),
            None => match (self.start, self.stop, self.points) {
                (Some(a), Some(b), Some(n)) => uniform_grid(a, b, n)?,
                _ => return Err(Error::Config("grid has no values and no range".into())),
            },
        };
        Ok(raw.into_iter().map(|x| x * scale).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// Everything a run needs. Unspecified physics falls back to
/// [`ModelParams::figure2_defaults`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub order: Order,
    /// Keep the cavity-induced pair kernel in the population system.
    pub include_intermolecular: bool,
    pub physics: ModelParams,
    pub policy: KernelPolicy,
    pub sweep: GridSpec,
    /// Inner detuning grid of N sweeps.
    pub grid: GridSpec,
    pub output: OutputSpec,
    pub oracle: OracleSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            order: Order::First,
            include_intermolecular: true,
            physics: ModelParams::figure2_defaults(),
            policy: KernelPolicy::default(),
            sweep: GridSpec::default(),
            grid: GridSpec::default(),
            output: OutputSpec::default(),
            oracle: OracleSettings::default(),
        }
    }
}

const TOP_KEYS: [&str; 9] = [
    "command",
    "order",
    "include_intermolecular",
    "physics",
    "policy",
    "sweep",
    "grid",
    "output",
    "oracle",
];
const POLICY_KEYS: [&str; 3] = ["tail_tol", "k_max_hard", "total_order_cap"];
const GRID_KEYS: [&str; 6] = ["variable", "start", "stop", "points", "values", "unit"];
const OUTPUT_KEYS: [&str; 2] = ["path", "format"];
const ORACLE_KEYS: [&str; 4] = ["photon_cutoff", "vib_cutoff", "dephasing", "vib_damping"];

fn section_keys(section: &str) -> Option<&'static [&'static str]> {
    match section {
        "physics" => Some(&ModelParams::FIELD_NAMES),
        "policy" => Some(&POLICY_KEYS),
        "sweep" | "grid" => Some(&GRID_KEYS),
        "output" => Some(&OUTPUT_KEYS),
        "oracle" => Some(&ORACLE_KEYS),
        _ => None,
    }
}

fn unknown_keys(table: &toml::Table) -> Vec<String> {
    let mut unknown = Vec::new();
    for (key, value) in table {
        if !TOP_KEYS.contains(&key.as_str()) {
            unknown.push(key.clone());
            continue;
        }
        if let (Some(known), Some(inner)) = (section_keys(key), value.as_table()) {
            for k in inner.keys() {
                if !known.contains(&k.as_str()) {
                    unknown.push(format!("{key}.{k}"));
                }
            }
        }
    }
    unknown
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn toml_error(text: &str, e: &toml::de::Error) -> Error {
    match e.span() {
        Some(span) => {
            let (line, col) = line_col(text, span.start);
            Error::Config(format!("line {line}, column {col}: {}", e.message().trim()))
        }
        None => Error::Config(e.message().trim().to_string()),
    }
}

fn parse_table(text: &str) -> Result<toml::Table> {
    text.parse::<toml::Table>().map_err(|e| toml_error(text, &e))
}

/// Applies `section.key=value` overrides. A bare key names a physics
/// field; values are read as TOML scalars, falling back to strings.
pub fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<()> {
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
        let key = key.trim();
        let raw = raw.trim();
        let (section, field) = match key.split_once('.') {
            Some((s, f)) => (Some(s), f),
            None if TOP_KEYS.contains(&key) => (None, key),
            None => (Some("physics"), key),
        };
        let value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        let target = match section {
            None => &mut *table,
            Some(s) => table
                .entry(s)
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("`{s}` is not a section")))?,
        };
        target.insert(field.to_string(), value);
    }
    Ok(())
}

fn finish(table: &toml::Table, text: &str) -> Result<RunConfig> {
    let unknown = unknown_keys(table);
    if !unknown.is_empty() {
        return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
    }
    let config: RunConfig = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    config.validate()?;
    Ok(config)
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    finish(&parse_table(text)?, text)
}

/// As [`parse_config`], with `key=value` overrides applied first. Positions
/// in type errors then refer to the merged document.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<RunConfig> {
    if overrides.is_empty() {
        return parse_config(text);
    }
    let mut table = parse_table(text)?;
    apply_overrides(&mut table, overrides)?;
    let merged = toml::to_string(&table).map_err(|e| Error::Config(format!("cannot merge overrides: {e}")))?;
    finish(&table, &merged)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.physics.validate()?;
        self.policy.validate()?;
        self.sweep.validate("sweep")?;
        self.grid.validate("grid")?;
        if self.grid.variable.is_some_and(|v| v == Variable::NMolecules) {
            return Err(Error::Config("grid.variable cannot be n_molecules".into()));
        }
        if self.sweep.variable == Some(Variable::NMolecules) {
            if let Some(v) = &self.sweep.values {
                if v.iter().any(|n| *n < 1.0 || n.fract() != 0.0) {
                    return Err(Error::Config("sweep over n_molecules needs positive integers".into()));
                }
            }
            if self.sweep.unit != Unit::Gamma {
                return Err(Error::Config("n_molecules sweeps are unitless; drop sweep.unit".into()));
            }
        }
        Ok(())
    }

    /// TOML text that parses back to the same configuration.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    pub fn sweep_variable(&self, command: Command) -> Variable {
        self.sweep.variable.unwrap_or_else(|| command.default_variable())
    }

    /// Molecule numbers of an N sweep.
    pub fn n_values(&self) -> Result<Vec<u32>> {
        let raw = match &self.sweep.values {
            Some(v) => v.clone(),
            None => match (self.sweep.start, self.sweep.stop, self.sweep.points) {
                (Some(a), Some(b), Some(n)) => uniform_grid(a, b, n)?,
                _ => return Ok(vec![self.physics.n_molecules]),
            },
        };
        let mut out: Vec<u32> = raw.iter().map(|x| x.round().max(1.0) as u32).collect();
        out.dedup();
        Ok(out)
    }
}

/// Keys accepted in each section, for documentation and error messages.
pub fn known_keys() -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for top in TOP_KEYS {
        match section_keys(top) {
            Some(keys) => {
                for k in keys {
                    out.insert(format!("{top}.{k}"));
                }
            }
            None => {
                out.insert(top.to_string());
            }
        }
    }
    out
}
