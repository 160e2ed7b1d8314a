//! `key = value` run configuration with `[section]` headers.
//!
//! Every physical quantity carries a unit suffix: `au` (atomic units),
//! `hw01` (temperature in units of ħω₀₁) or `trev` (time in revival periods).
//! Comments start with `#` or `;`.
//!
//! ```text
//! [molecule]
//! preset = HI
//!
//! [state]
//! nbar = 4
//!
//! [bath]
//! delta = 540 au
//! T = 10 hw01
//!
//! [times]
//! snapshots = 0.125, 0.25 trev
//!
//! [grid]
//! x = -0.5, 0.9, 281
//! p = -50, 50, 1001
//! ```

use std::collections::BTreeMap;
use std::fmt;

use crate::basis::MorseParams;
use crate::open_system::Temperature;
use crate::wigner::GridSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "config line {line}, field '{}': {}", self.field, self.message),
            None => write!(f, "config field '{}': {}", self.field, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: Option<usize>, field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { line, field: field.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Alpha(f64),
    Eta(f64),
    MeanLevel(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeValue {
    Au(f64),
    Revivals(f64),
}

impl TimeValue {
    pub fn in_au(self, revival_time: f64) -> f64 {
        match self {
            TimeValue::Au(t) => t,
            TimeValue::Revivals(f) => f * revival_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub deltas: Option<Vec<f64>>,
    pub temperatures: Option<Vec<Temperature>>,
    /// Coupling held fixed in temperature sweeps.
    pub delta: f64,
    /// Temperature held fixed in coupling sweeps.
    pub temperature: Temperature,
    /// Snapshot time as a fraction of the revival time.
    pub fraction: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { deltas: None, temperatures: None, delta: 540.0, temperature: Temperature::Fundamental(10.0), fraction: 0.125 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub molecule: MorseParams,
    pub preset: Option<String>,
    pub state: InitialState,
    pub delta: f64,
    pub temperature: Temperature,
    /// Snapshot times as fractions of the revival time, each in (0, 1].
    pub snapshots: Vec<f64>,
    pub t_final: Option<TimeValue>,
    pub dt: Option<TimeValue>,
    pub grid: Option<GridSpec>,
    pub sweep: SweepConfig,
}

impl RunConfig {
    pub fn from_preset(name: &str) -> Result<Self, ConfigError> {
        let molecule = MorseParams::preset(name).ok_or_else(|| err(None, "preset", format!("unknown preset '{name}'")))?;
        Ok(Self {
            molecule,
            preset: Some(name.to_string()),
            state: InitialState::MeanLevel(4.0),
            delta: 0.0,
            temperature: Temperature::Hartree(0.0),
            snapshots: vec![0.125, 0.25],
            t_final: None,
            dt: None,
            grid: None,
            sweep: SweepConfig::default(),
        })
    }

    /// Parses a config file; `preset` supplies the molecule when the file has
    /// no `[molecule]` section.
    pub fn parse(text: &str, preset: Option<&str>) -> Result<Self, ConfigError> {
        let raw = RawConfig::parse(text)?;
        raw.check_known()?;

        let (molecule, preset_name) = match raw.section("molecule") {
            Some(sec) => parse_molecule(sec)?,
            None => {
                let name = preset.ok_or_else(|| err(None, "molecule", "no [molecule] section and no --preset"))?;
                (MorseParams::preset(name).ok_or_else(|| err(None, "preset", format!("unknown preset '{name}'")))?, Some(name.to_string()))
            }
        };
        let mut cfg = Self::from_preset("HI")?;
        cfg.molecule = molecule;
        cfg.preset = preset_name;

        if let Some(sec) = raw.section("state") {
            let given: Vec<&str> = ["alpha", "eta", "nbar"].into_iter().filter(|k| sec.contains_key(*k)).collect();
            if given.len() != 1 {
                let line = sec.values().map(|e| e.line).min();
                return Err(err(line, "state", format!("exactly one of alpha, eta, nbar is required (found {})", given.len())));
            }
            let entry = &sec[given[0]];
            let v = entry.plain(given[0])?;
            cfg.state = match given[0] {
                "alpha" => InitialState::Alpha(v),
                "eta" => InitialState::Eta(v),
                _ => InitialState::MeanLevel(v),
            };
        }
        if let Some(sec) = raw.section("bath") {
            if let Some(e) = sec.get("delta") {
                cfg.delta = e.scalar("delta", &["au"])?.0;
                if cfg.delta < 0.0 {
                    return Err(err(Some(e.line), "delta", "must be non-negative"));
                }
            }
            if let Some(e) = sec.get("T") {
                cfg.temperature = e.temperature("T")?;
            }
        }
        if let Some(sec) = raw.section("times") {
            if let Some(e) = sec.get("snapshots") {
                let (values, _) = e.quantity("snapshots", &["trev"])?;
                if values.is_empty() || values.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
                    return Err(err(Some(e.line), "snapshots", "fractions must lie in (0, 1]"));
                }
                if !values.windows(2).all(|w| w[0] < w[1]) {
                    return Err(err(Some(e.line), "snapshots", "fractions must be strictly increasing"));
                }
                cfg.snapshots = values;
            }
            if let Some(e) = sec.get("t_final") {
                cfg.t_final = Some(e.time("t_final")?);
            }
            if let Some(e) = sec.get("dt") {
                cfg.dt = Some(e.time("dt")?);
            }
        }
        if let Some(sec) = raw.section("grid") {
            let mut grid = GridSpec::default();
            if let Some(e) = sec.get("x") {
                (grid.x_min, grid.x_max, grid.nx) = e.axis("x")?;
            }
            if let Some(e) = sec.get("p") {
                (grid.p_min, grid.p_max, grid.np) = e.axis("p")?;
            }
            if let Some(e) = sec.get("half_width") {
                grid.half_width = e.plain("half_width")?;
            }
            grid.validate().map_err(|e| err(sec.values().map(|e| e.line).min(), "grid", e.to_string()))?;
            cfg.grid = Some(grid);
        }
        if let Some(sec) = raw.section("sweep") {
            if let Some(e) = sec.get("deltas") {
                cfg.sweep.deltas = Some(e.quantity("deltas", &["au"])?.0);
            }
            if let Some(e) = sec.get("temperatures") {
                let (values, unit) = e.quantity("temperatures", &["au", "hw01"])?;
                cfg.sweep.temperatures = Some(values.into_iter().map(|v| to_temperature(v, unit)).collect());
            }
            if let Some(e) = sec.get("delta") {
                cfg.sweep.delta = e.scalar("delta", &["au"])?.0;
            }
            if let Some(e) = sec.get("T") {
                cfg.sweep.temperature = e.temperature("T")?;
            }
            if let Some(e) = sec.get("fraction") {
                let f = e.scalar("fraction", &["trev"])?.0;
                if !(f > 0.0 && f <= 1.0) {
                    return Err(err(Some(e.line), "fraction", "must lie in (0, 1]"));
                }
                cfg.sweep.fraction = f;
            }
        }
        Ok(cfg)
    }
}

fn to_temperature(v: f64, unit: &str) -> Temperature {
    if unit == "hw01" {
        Temperature::Fundamental(v)
    } else {
        Temperature::Hartree(v)
    }
}

fn parse_molecule(sec: &BTreeMap<String, Entry>) -> Result<(MorseParams, Option<String>), ConfigError> {
    if let Some(e) = sec.get("preset") {
        if sec.len() > 1 {
            return Err(err(Some(e.line), "preset", "preset and explicit parameters are mutually exclusive"));
        }
        let name = e.value.trim();
        let params = MorseParams::preset(name).ok_or_else(|| err(Some(e.line), "preset", format!("unknown preset '{name}'")))?;
        return Ok((params, Some(name.to_string())));
    }
    let first_line = sec.values().map(|e| e.line).min();
    let get = |key: &str| -> Result<f64, ConfigError> {
        let e = sec.get(key).ok_or_else(|| err(first_line, key, "missing required field"))?;
        Ok(e.scalar(key, &["au"])?.0)
    };
    let params = MorseParams {
        dissociation_energy: get("D")?,
        range_parameter: get("beta")?,
        equilibrium_distance: get("r0")?,
        reduced_mass: get("mu")?,
    };
    params.validate().map_err(|e| match e {
        crate::Error::InvalidParams { field, reason } => err(sec.get(field).map(|e| e.line), field, reason),
        other => err(first_line, "molecule", other.to_string()),
    })?;
    Ok((params, None))
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

impl Entry {
    /// Comma-separated numbers followed by one unit suffix.
    fn quantity<'a>(&self, field: &str, units: &[&'a str]) -> Result<(Vec<f64>, &'a str), ConfigError> {
        let text = self.value.trim();
        let (numbers, unit) = match text.rsplit_once(char::is_whitespace) {
            Some((nums, unit)) if unit.chars().all(|c| c.is_ascii_alphanumeric()) && unit.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) => {
                (nums, unit)
            }
            _ => {
                return Err(err(Some(self.line), field, format!("missing unit suffix (expected one of: {})", units.join(", "))));
            }
        };
        let unit = units
            .iter()
            .find(|u| **u == unit)
            .ok_or_else(|| err(Some(self.line), field, format!("unit '{unit}' not allowed here (expected one of: {})", units.join(", "))))?;
        let values = numbers
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| err(Some(self.line), field, format!("'{}' is not a number", s.trim()))))
            .collect::<Result<Vec<_>, _>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(err(Some(self.line), field, "values must be finite"));
        }
        Ok((values, unit))
    }

    fn scalar<'a>(&self, field: &str, units: &[&'a str]) -> Result<(f64, &'a str), ConfigError> {
        let (values, unit) = self.quantity(field, units)?;
        match values.as_slice() {
            [v] => Ok((*v, unit)),
            _ => Err(err(Some(self.line), field, "expected a single value")),
        }
    }

    fn temperature(&self, field: &str) -> Result<Temperature, ConfigError> {
        let (v, unit) = self.scalar(field, &["au", "hw01"])?;
        if v < 0.0 {
            return Err(err(Some(self.line), field, "must be non-negative"));
        }
        Ok(to_temperature(v, unit))
    }

    fn time(&self, field: &str) -> Result<TimeValue, ConfigError> {
        let (v, unit) = self.scalar(field, &["au", "trev"])?;
        if !(v > 0.0) {
            return Err(err(Some(self.line), field, "must be positive"));
        }
        Ok(if unit == "au" { TimeValue::Au(v) } else { TimeValue::Revivals(v) })
    }

    /// Dimensionless number, no unit.
    fn plain(&self, field: &str) -> Result<f64, ConfigError> {
        let v: f64 = self
            .value
            .trim()
            .parse()
            .map_err(|_| err(Some(self.line), field, format!("'{}' is not a dimensionless number", self.value.trim())))?;
        if !v.is_finite() {
            return Err(err(Some(self.line), field, "must be finite"));
        }
        Ok(v)
    }

    /// `min, max, count`.
    fn axis(&self, field: &str) -> Result<(f64, f64, usize), ConfigError> {
        let parts: Vec<&str> = self.value.split(',').map(str::trim).collect();
        let bad = || err(Some(self.line), field, "expected 'min, max, count'");
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].parse().map_err(|_| bad())?;
        let n: usize = parts[2].parse().map_err(|_| bad())?;
        Ok((lo, hi, n))
    }
}

const KNOWN: &[(&str, &[&str])] = &[
    ("molecule", &["preset", "D", "beta", "r0", "mu"]),
    ("state", &["alpha", "eta", "nbar"]),
    ("bath", &["delta", "T"]),
    ("times", &["snapshots", "t_final", "dt"]),
    ("grid", &["x", "p", "half_width"]),
    ("sweep", &["deltas", "temperatures", "delta", "T", "fraction"]),
];

#[derive(Debug, Default)]
struct RawConfig {
    sections: BTreeMap<String, (usize, BTreeMap<String, Entry>)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        let mut current: Option<String> = None;
        for (idx, line) in text.lines().enumerate() {
            let number = idx + 1;
            let content = line.split(['#', ';']).next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(Some(number), "section", format!("malformed section header '{content}'")))?
                    .trim()
                    .to_string();
                if raw.sections.contains_key(&name) {
                    return Err(err(Some(number), &name, "duplicate section"));
                }
                raw.sections.insert(name.clone(), (number, BTreeMap::new()));
                current = Some(name);
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(Some(number), content, "expected 'key = value'"))?;
            let (key, value) = (key.trim(), value.trim());
            let section = current.as_ref().ok_or_else(|| err(Some(number), key, "key outside any [section]"))?;
            let entries = &mut raw.sections.get_mut(section).expect("section inserted").1;
            if entries.contains_key(key) {
                return Err(err(Some(number), key, "duplicate key"));
            }
            if value.is_empty() {
                return Err(err(Some(number), key, "empty value"));
            }
            entries.insert(key.to_string(), Entry { value: value.to_string(), line: number });
        }
        Ok(raw)
    }

    fn check_known(&self) -> Result<(), ConfigError> {
        for (name, (line, entries)) in &self.sections {
            let keys = KNOWN
                .iter()
                .find(|(s, _)| s == name)
                .map(|(_, k)| *k)
                .ok_or_else(|| err(Some(*line), name, "unknown section"))?;
            for (key, entry) in entries {
                if !keys.contains(&key.as_str()) {
                    return Err(err(Some(entry.line), key, format!("unknown key in [{name}]")));
                }
            }
        }
        Ok(())
    }

    fn section(&self, name: &str) -> Option<&BTreeMap<String, Entry>> {
        self.sections.get(name).map(|(_, e)| e)
    }
}
