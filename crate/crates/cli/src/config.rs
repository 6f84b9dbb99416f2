//! Run configuration: JSON file plus `--set key=value` overrides.
//!
//! Every `*_hz` field is an ordinary frequency in Hz; conversion to angular
//! units happens when the library types are built.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use ionmix::crystal::{CrystalConfig, ModeLabel};
use ionmix::species::{self, IonSpecies};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub crystal: CrystalBlock,
    #[serde(default)]
    pub lasers: Vec<LaserBlock>,
    #[serde(default)]
    pub gate: Option<GateBlock>,
    #[serde(default)]
    pub oracle: OracleBlock,
    #[serde(default)]
    pub budget: BudgetBlock,
    #[serde(default)]
    pub scan: ScanBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalBlock {
    pub ions: Vec<String>,
    pub reference_species: String,
    /// Single-ion axial frequency of the reference species.
    pub reference_frequency_hz: f64,
    /// When set, the confinement is rescaled so the lowest mode sits here.
    #[serde(default)]
    pub ip_frequency_hz: Option<f64>,
}

impl Default for CrystalBlock {
    fn default() -> Self {
        CrystalBlock {
            ions: vec!["40Ca+".into(), "88Sr+".into()],
            reference_species: "88Sr+".into(),
            reference_frequency_hz: 660e3,
            ip_frequency_hz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserBlock {
    pub species: String,
    #[serde(default)]
    pub wavelength_nm: Option<f64>,
    /// Cosine between the wavevector and the trap axis.
    #[serde(default = "one")]
    pub wavevector_axis_projection: f64,
    #[serde(default = "one")]
    pub intensity_rel: f64,
    /// Overrides the calibrated carrier Rabi frequency of this species.
    #[serde(default)]
    pub carrier_rabi_hz: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateBlock {
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default)]
    pub gate_time_us: Option<f64>,
    #[serde(default)]
    pub detuning_hz: Option<f64>,
    #[serde(default = "default_loops")]
    pub loops: u32,
    #[serde(default)]
    pub ramp_fraction: f64,
    /// Mean occupation per mode label.
    #[serde(default)]
    pub nbar: BTreeMap<String, f64>,
    #[serde(default = "default_bell_phase")]
    pub bell_phase: f64,
    /// Driven ions; defaults to the first and last ion of the chain.
    #[serde(default)]
    pub qubits: Option<[usize; 2]>,
    #[serde(default = "default_points")]
    pub time_points: usize,
    #[serde(default = "default_chi_points")]
    pub chi_points: usize,
}

fn default_mode() -> String {
    "IP".into()
}
fn default_loops() -> u32 {
    1
}
fn default_bell_phase() -> f64 {
    PI / 2.0
}
fn default_points() -> usize {
    201
}
fn default_chi_points() -> usize {
    64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HamiltonianChoice {
    Full,
    #[serde(alias = "LD", alias = "lamb_dicke")]
    Ld,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleBlock {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_hamiltonian")]
    pub hamiltonian: HamiltonianChoice,
    /// Modes kept in the simulation space; defaults to the gate mode.
    #[serde(default)]
    pub modes: Vec<String>,
}

fn default_n_max() -> usize {
    40
}
fn default_hamiltonian() -> HamiltonianChoice {
    HamiltonianChoice::Full
}

impl Default for OracleBlock {
    fn default() -> Self {
        OracleBlock {
            enabled: false,
            n_max: default_n_max(),
            hamiltonian: default_hamiltonian(),
            modes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetBlock {
    #[serde(default)]
    pub nbar: f64,
    /// Gate detuning from the out-of-phase sideband; the worst case
    /// `2ω_IP − ω_OOP` when absent.
    #[serde(default)]
    pub detuning_hz: Option<f64>,
    #[serde(default = "default_loops")]
    pub loops: u32,
}

impl Default for BudgetBlock {
    fn default() -> Self {
        BudgetBlock {
            nbar: 0.0,
            detuning_hz: None,
            loops: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    #[serde(default = "default_pool")]
    pub pool: Vec<String>,
    #[serde(default = "default_window")]
    pub window_khz: f64,
    /// Candidate gate times for the mode advisor.
    #[serde(default = "default_gate_times")]
    pub gate_times_us: Vec<f64>,
}

fn default_pool() -> Vec<String> {
    ["40Ca+", "43Ca+", "86Sr+", "88Sr+"]
        .map(String::from)
        .to_vec()
}
fn default_window() -> f64 {
    50.0
}
fn default_gate_times() -> Vec<f64> {
    vec![71.0, 100.0, 160.0]
}

impl Default for ScanBlock {
    fn default() -> Self {
        ScanBlock {
            pool: default_pool(),
            window_khz: default_window(),
            gate_times_us: default_gate_times(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_format")]
    pub format: Format,
    /// Output file, or the artifact directory for `gate`. Standard output
    /// (or the working directory) when absent.
    #[serde(default)]
    pub path: Option<String>,
}

fn default_format() -> Format {
    Format::Table
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            format: default_format(),
            path: None,
        }
    }
}

/// Error in the configuration itself, as opposed to a failed computation.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(ConfigError(msg.into()))
}

/// Parses `text`, reporting the line, column and field path of any error.
pub fn parse(text: &str) -> Result<Value> {
    serde_json::from_str(text)
        .map_err(|e| config_error(format!("line {}, column {}: {e}", e.line(), e.column())))
}

/// Sets `value` at the dotted `key`, creating intermediate objects.
pub fn set(root: &mut Value, key: &str, value: &str) -> Result<()> {
    let parsed = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(config_error(format!("empty component in key `{key}`")));
        }
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
        node = match node {
            Value::Object(map) => map.entry(part.to_string()).or_insert(Value::Null),
            Value::Array(items) => {
                let index: usize = part.parse().map_err(|_| {
                    config_error(format!("`{part}` in `{key}` is not an array index"))
                })?;
                let len = items.len();
                items.get_mut(index).ok_or_else(|| {
                    config_error(format!(
                        "index {index} in `{key}` out of range ({len} items)"
                    ))
                })?
            }
            _ => {
                return Err(config_error(format!(
                    "`{}` in `{key}` is not an object",
                    parts[..i].join(".")
                )))
            }
        };
    }
    *node = parsed;
    Ok(())
}

/// Loads the file (or the defaults), applies the overrides and validates.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut root = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(|e| config_error(format!("{e:#}")))?;
            parse(&text).map_err(|e| config_error(format!("{}: {e}", p.display())))?
        }
        None => serde_json::to_value(RunConfig::default())?,
    };
    for o in overrides {
        let (key, value) = o
            .split_once('=')
            .ok_or_else(|| config_error(format!("override `{o}` is not key=value")))?;
        set(&mut root, key.trim(), value.trim())?;
    }
    let config: RunConfig = serde_path_to_error::deserialize(root)
        .map_err(|e| config_error(format!("field `{}`: {}", e.path(), e.inner())))?;
    config.validate()?;
    Ok(config)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(config_error(format!("{name} must be positive, got {v}")))
    }
}

pub fn mode_label(s: &str) -> Result<ModeLabel> {
    s.parse().map_err(|e| config_error(format!("{e}")))
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        positive(
            "crystal.reference_frequency_hz",
            self.crystal.reference_frequency_hz,
        )?;
        if let Some(f) = self.crystal.ip_frequency_hz {
            positive("crystal.ip_frequency_hz", f)?;
        }
        for label in self
            .crystal
            .ions
            .iter()
            .chain([&self.crystal.reference_species])
        {
            species::lookup(label)?;
        }
        for l in &self.lasers {
            species::lookup(&l.species)?;
            if let Some(w) = l.wavelength_nm {
                positive("lasers.wavelength_nm", w)?;
            }
            if let Some(r) = l.carrier_rabi_hz {
                if !(r.is_finite() && r >= 0.0) {
                    bail!(ConfigError(format!(
                        "lasers.carrier_rabi_hz must be non-negative, got {r}"
                    )));
                }
            }
        }
        if let Some(g) = &self.gate {
            mode_label(&g.mode)?;
            match (g.gate_time_us, g.detuning_hz) {
                (Some(t), None) => positive("gate.gate_time_us", t)?,
                (None, Some(d)) => positive("gate.detuning_hz", d)?,
                _ => bail!(ConfigError(
                    "give exactly one of gate.gate_time_us and gate.detuning_hz".into()
                )),
            }
            if g.loops == 0 {
                bail!(ConfigError("gate.loops must be at least 1".into()));
            }
            for (label, n) in &g.nbar {
                mode_label(label)?;
                if !(n.is_finite() && *n >= 0.0) {
                    bail!(ConfigError(format!(
                        "gate.nbar.{label} must be non-negative, got {n}"
                    )));
                }
            }
            if g.time_points == 0 {
                bail!(ConfigError("gate.time_points must be at least 1".into()));
            }
        }
        for m in &self.oracle.modes {
            mode_label(m)?;
        }
        for label in &self.scan.pool {
            species::lookup(label)?;
        }
        positive("scan.window_khz", self.scan.window_khz)?;
        for &t in &self.scan.gate_times_us {
            positive("scan.gate_times_us", t)?;
        }
        Ok(())
    }

    /// Species with any wavelength override applied.
    pub fn species(&self, label: &str) -> Result<IonSpecies> {
        let s = species::lookup(label)?;
        match self
            .lasers
            .iter()
            .find(|l| l.species == label)
            .and_then(|l| l.wavelength_nm)
        {
            Some(w) => Ok(s.with_wavelength(w * 1e-9)?),
            None => Ok(s),
        }
    }

    pub fn crystal(&self) -> Result<CrystalConfig> {
        let ions = self
            .crystal
            .ions
            .iter()
            .map(|l| self.species(l))
            .collect::<Result<Vec<_>>>()?;
        let reference = self.species(&self.crystal.reference_species)?;
        let config =
            CrystalConfig::new(ions, reference, TAU * self.crystal.reference_frequency_hz)?;
        match self.crystal.ip_frequency_hz {
            Some(f) => {
                let ip = ionmix::crystal::normal_modes(&config)?.ip_frequency();
                Ok(config.scaled(TAU * f / ip)?)
            }
            None => Ok(config),
        }
    }

    pub fn pool(&self) -> Result<Vec<IonSpecies>> {
        self.scan.pool.iter().map(|l| self.species(l)).collect()
    }

    pub fn gate(&self) -> Result<&GateBlock> {
        self.gate
            .as_ref()
            .ok_or_else(|| config_error("this command needs a `gate` block"))
    }
}
