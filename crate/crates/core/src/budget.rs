//! Sideband spectra, near-degeneracy search and the second-order in-phase
//! sideband error budget for dual-species gates.
//!
//! A gate driven near the out-of-phase sideband of a two-ion crystal also
//! drives the second-order in-phase line `2ω_IP` off-resonantly. With the
//! in-phase drive amplitude `½ Σ_j η_{j,IP}² Ω_j`, the spurious displacement
//! after `t_g` is
//!
//! ```text
//! α = ½ (Σ_j η_{j,IP}² Ω_j) ∫₀^{t_g} e^{−iΔt} dt,   Δ = ω − 2ω_IP
//! |α|² = (Σ_j η_{j,IP}² Ω_j)² sin²(Δt_g/2) / Δ²
//! ```
//!
//! and the gate error is `ε = |α|² (n̄_IP + ½)`. At exact resonance with a
//! calibrated single-loop gate this becomes
//! `ε = (π²/16)(n̄+½)(Σ_j η_{j,IP}²/η_{j,OOP})²`.

use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::{lamb_dicke, parallel_lasers, CouplingTable};
use crate::crystal::{normal_modes, CrystalConfig, ModeLabel, ModeTable};
use crate::error::{Error, Result};
use crate::msgate::DECOUPLED_ETA;
use crate::species::IonSpecies;

/// Default half-width for calling two lines nearly degenerate, rad/s.
pub const DEFAULT_WINDOW: f64 = TAU * 50e3;

/// Margins closer than this (relative) rank as ties.
const MARGIN_TIE: f64 = 1e-9;

/// Frequency offset of a sideband from the carrier as an integer combination
/// of mode frequencies.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Combination(pub Vec<(ModeLabel, i32)>);

impl Combination {
    fn single(mode: ModeLabel, n: i32) -> Self {
        Combination(vec![(mode, n)])
    }

    fn negated(&self) -> Self {
        Combination(self.0.iter().map(|&(m, n)| (m, -n)).collect())
    }

    pub fn order(&self) -> u32 {
        self.0.iter().map(|(_, n)| n.unsigned_abs()).sum()
    }
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (mode, n)) in self.0.iter().enumerate() {
            let sign = if *n < 0 {
                "-"
            } else if i > 0 {
                "+"
            } else {
                ""
            };
            match n.unsigned_abs() {
                1 => write!(f, "{sign}{mode}")?,
                k => write!(f, "{sign}{k}x{mode}")?,
            }
        }
        Ok(())
    }
}

impl Serialize for Combination {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SidebandLine {
    pub combination: Combination,
    /// Offset from the carrier, rad/s.
    pub offset: f64,
    pub order: u32,
    /// Largest single-ion product of the η's involved.
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SidebandSpectrum {
    /// Sorted by offset.
    pub lines: Vec<SidebandLine>,
}

impl SidebandSpectrum {
    pub fn line(&self, combination: &Combination) -> Option<&SidebandLine> {
        self.lines.iter().find(|l| &l.combination == combination)
    }
}

/// All first-order lines `±ω_β` and, for `max_order = 2`, the second-order
/// lines `±2ω_β`, `±(ω_β + ω_γ)` and `±(ω_γ − ω_β)`.
pub fn sideband_spectrum(
    modes: &ModeTable,
    coupling: &CouplingTable,
    max_order: u32,
) -> Result<SidebandSpectrum> {
    if !(1..=2).contains(&max_order) {
        return Err(Error::InvalidArgument(format!(
            "max_order must be 1 or 2, got {max_order}"
        )));
    }
    let strength = |terms: &[(ModeLabel, i32)]| -> Result<f64> {
        let mut best: f64 = 0.0;
        for ion in 0..coupling.ions.len() {
            let mut p = 1.0;
            for &(mode, n) in terms {
                p *= coupling.eta(ion, mode)?.powi(n.abs());
            }
            best = best.max(p);
        }
        Ok(best)
    };
    let mut positive: Vec<Combination> = Vec::new();
    for m in &modes.modes {
        positive.push(Combination::single(m.label, 1));
    }
    if max_order == 2 {
        for (i, a) in modes.modes.iter().enumerate() {
            positive.push(Combination::single(a.label, 2));
            for b in &modes.modes[i + 1..] {
                positive.push(Combination(vec![(a.label, 1), (b.label, 1)]));
                positive.push(Combination(vec![(b.label, 1), (a.label, -1)]));
            }
        }
    }
    let mut lines = Vec::with_capacity(2 * positive.len());
    for c in positive {
        let offset =
            c.0.iter()
                .map(|&(mode, n)| Ok(f64::from(n) * modes.mode(mode)?.frequency))
                .sum::<Result<f64>>()?;
        let s = strength(&c.0)?;
        let order = c.order();
        lines.push(SidebandLine {
            combination: c.negated(),
            offset: -offset,
            order,
            strength: s,
        });
        lines.push(SidebandLine {
            combination: c,
            offset,
            order,
            strength: s,
        });
    }
    lines.sort_by(|a, b| {
        a.offset
            .total_cmp(&b.offset)
            .then_with(|| a.combination.cmp(&b.combination))
    });
    Ok(SidebandSpectrum { lines })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Degeneracy {
    pub lower: SidebandLine,
    pub upper: SidebandLine,
    /// `|offset difference|`, rad/s.
    pub gap: f64,
    /// At least one member is a first-order line a gate could target.
    pub gate_relevant: bool,
}

/// Gap between two lines; symmetric in its arguments.
pub fn line_gap(a: &SidebandLine, b: &SidebandLine) -> f64 {
    (a.offset - b.offset).abs()
}

/// Every pair of distinct lines closer than `window`, narrowest first.
pub fn find_near_degeneracies(spectrum: &SidebandSpectrum, window: f64) -> Result<Vec<Degeneracy>> {
    if !(window > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "window must be positive, got {window}"
        )));
    }
    let lines = &spectrum.lines;
    let mut out = Vec::new();
    for (i, a) in lines.iter().enumerate() {
        for b in &lines[i + 1..] {
            let gap = line_gap(a, b);
            if gap < window {
                let (lower, upper) = if a.offset <= b.offset { (a, b) } else { (b, a) };
                out.push(Degeneracy {
                    lower: lower.clone(),
                    upper: upper.clone(),
                    gap,
                    gate_relevant: a.order == 1 || b.order == 1,
                });
            }
        }
    }
    out.sort_by(|x, y| {
        x.gap
            .total_cmp(&y.gap)
            .then_with(|| x.lower.offset.total_cmp(&y.lower.offset))
            .then_with(|| x.lower.combination.cmp(&y.lower.combination))
    });
    Ok(out)
}

/// `∫₀^T e^{−iΔt} dt` without cancellation near `Δ = 0`.
fn oscillating_integral(detuning: f64, t: f64) -> Complex64 {
    let x = detuning * t / 2.0;
    let sinc = if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    };
    Complex64::from_polar(t * sinc, -x)
}

/// Displacement driven through the second-order in-phase line by a drive at
/// `drive_freq` near `collision_freq`, with carrier Rabi frequency `rabi[j]`
/// on ion `j`.
pub fn displacement_alpha(
    coupling: &CouplingTable,
    rabi: &[f64],
    drive_freq: f64,
    collision_freq: f64,
    gate_time: f64,
) -> Result<Complex64> {
    if !(gate_time > 0.0 && gate_time.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "gate time must be positive, got {gate_time}"
        )));
    }
    if rabi.len() != coupling.ions.len() {
        return Err(Error::InvalidArgument(format!(
            "{} Rabi frequencies for {} ions",
            rabi.len(),
            coupling.ions.len()
        )));
    }
    let drive = (0..rabi.len())
        .map(|j| Ok(coupling.eta(j, ModeLabel::IP)?.powi(2) * rabi[j]))
        .sum::<Result<f64>>()?;
    Ok(0.5 * drive * oscillating_integral(drive_freq - collision_freq, gate_time))
}

/// Error from the second-order in-phase line for a gate on the out-of-phase
/// mode of a two-ion dual-species crystal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBudget {
    pub crystal: String,
    pub gate_mode: ModeLabel,
    /// Gate detuning δ from the out-of-phase sideband, rad/s.
    pub detuning: f64,
    pub gate_time: f64,
    pub loops: u32,
    pub collision: Combination,
    pub omega_ip: f64,
    pub omega_oop: f64,
    /// `2ω_IP − ω_OOP`, rad/s.
    pub gap: f64,
    /// `ω_OOP + δ − 2ω_IP`, rad/s.
    pub collision_detuning: f64,
    /// Calibrated carrier Rabi frequency per ion, rad/s.
    pub rabi: Vec<f64>,
    pub eta_ip: Vec<f64>,
    pub eta_oop: Vec<f64>,
    pub displacement_sq: f64,
    pub nbar: f64,
    pub epsilon: f64,
}

fn two_ion_dual(crystal: &CrystalConfig) -> Result<()> {
    if crystal.ions.len() != 2 {
        return Err(Error::ChainShape(format!(
            "the second-order in-phase budget needs a two-ion chain, got {} ions",
            crystal.ions.len()
        )));
    }
    if crystal.ions[0].element() == crystal.ions[1].element() {
        return Err(Error::ChainShape(format!(
            "the second-order in-phase budget needs two different species, got {}",
            crystal.name()
        )));
    }
    Ok(())
}

/// Crystal rescaled so its in-phase mode sits at `omega_ip`, with its modes
/// and parallel-beam couplings.
fn scaled_to_ip(
    crystal: &CrystalConfig,
    omega_ip: f64,
) -> Result<(CrystalConfig, ModeTable, CouplingTable)> {
    if !(omega_ip > 0.0 && omega_ip.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ω_IP must be positive, got {omega_ip}"
        )));
    }
    let unscaled = normal_modes(crystal)?;
    let config = crystal.scaled(omega_ip / unscaled.ip_frequency())?;
    let modes = normal_modes(&config)?;
    let coupling = lamb_dicke(&modes, &parallel_lasers(&modes, 1.0))?;
    Ok((config, modes, coupling))
}

/// Budget for a calibrated `loops`-loop gate on the out-of-phase mode at
/// detuning `detuning` (positive: blue of the sideband).
pub fn error_2xip_at(
    crystal: &CrystalConfig,
    omega_ip: f64,
    nbar: f64,
    detuning: f64,
    loops: u32,
) -> Result<ErrorBudget> {
    two_ion_dual(crystal)?;
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "n̄ must be non-negative, got {nbar}"
        )));
    }
    if loops == 0 || !(detuning.is_finite() && detuning != 0.0) {
        return Err(Error::InvalidGate(
            "need K ≥ 1 and a nonzero detuning".into(),
        ));
    }
    let (config, modes, coupling) = scaled_to_ip(crystal, omega_ip)?;
    let omega_ip = modes.mode(ModeLabel::IP)?.frequency;
    let omega_oop = modes.mode(ModeLabel::OOP)?.frequency;
    let gate_time = TAU * f64::from(loops) / detuning.abs();
    let product = detuning.abs() / (4.0 * f64::from(loops).sqrt());
    let eta_ip: Vec<f64> = (0..2)
        .map(|j| coupling.eta(j, ModeLabel::IP))
        .collect::<Result<_>>()?;
    let eta_oop: Vec<f64> = (0..2)
        .map(|j| coupling.eta(j, ModeLabel::OOP))
        .collect::<Result<_>>()?;
    for (j, &e) in eta_oop.iter().enumerate() {
        if e <= DECOUPLED_ETA {
            return Err(Error::DecoupledIon {
                ion: j,
                species: config.ions[j].label.clone(),
                mode: ModeLabel::OOP,
            });
        }
    }
    let rabi: Vec<f64> = eta_oop.iter().map(|e| product / e).collect();
    let drive_freq = omega_oop + detuning;
    let collision_freq = 2.0 * omega_ip;
    let alpha = displacement_alpha(&coupling, &rabi, drive_freq, collision_freq, gate_time)?;
    let displacement_sq = alpha.norm_sqr();
    Ok(ErrorBudget {
        crystal: config.name(),
        gate_mode: ModeLabel::OOP,
        detuning,
        gate_time,
        loops,
        collision: Combination::single(ModeLabel::IP, 2),
        omega_ip,
        omega_oop,
        gap: collision_freq - omega_oop,
        collision_detuning: drive_freq - collision_freq,
        rabi,
        eta_ip,
        eta_oop,
        displacement_sq,
        nbar,
        epsilon: displacement_sq * (nbar + 0.5),
    })
}

/// Worst case: the blue tone sits exactly on `2ω_IP`, so `δ = 2ω_IP − ω_OOP`.
pub fn error_2xip(
    crystal: &CrystalConfig,
    omega_ip: f64,
    nbar: f64,
    loops: u32,
) -> Result<ErrorBudget> {
    two_ion_dual(crystal)?;
    let (_, modes, _) = scaled_to_ip(crystal, omega_ip)?;
    let gap = 2.0 * modes.mode(ModeLabel::IP)?.frequency - modes.mode(ModeLabel::OOP)?.frequency;
    error_2xip_at(crystal, omega_ip, nbar, gap, loops)
}

/// Resonant single-loop error written directly in the η's:
/// `(π²/16)(n̄+½)(Σ_j η_{j,IP}²/η_{j,OOP})²`.
pub fn worst_case_epsilon(eta_ip: &[f64], eta_oop: &[f64], nbar: f64) -> f64 {
    let sum: f64 = eta_ip.iter().zip(eta_oop).map(|(a, b)| a * a / b).sum();
    PI * PI / 16.0 * (nbar + 0.5) * sum * sum
}

/// Chain layouts built from a heavy/light species pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// light-heavy
    TwoIon,
    /// light-heavy-light
    LightOuter,
    /// heavy-light-heavy
    HeavyOuter,
}

pub const ALL_LAYOUTS: [Layout; 3] = [Layout::TwoIon, Layout::LightOuter, Layout::HeavyOuter];

/// One row of the mode table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub configuration: String,
    pub mode: ModeLabel,
    /// `ω_β / ω_ref` with the heavy species as reference.
    pub ratio_reference: f64,
    /// `ω_β / ω_IP`
    pub ratio_ip: f64,
    pub b_heavy: f64,
    pub b_light: f64,
    pub eta_heavy: f64,
    pub eta_light: f64,
    /// Distance from this mode's first-order line to the nearest other line
    /// of the second-order spectrum, rad/s.
    pub margin: f64,
    pub nearest: Combination,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanEntry {
    pub configuration: String,
    pub layout: Layout,
    pub heavy: String,
    pub light: String,
    pub rows: Vec<TableRow>,
}

impl ScanEntry {
    pub fn min_margin(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.margin)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `(light, heavy)` pairs in table order: heavy isotopes descending by
/// mass, light ascending. A pool of one element pairs each isotope with
/// itself.
pub fn species_pairs(pool: &[IonSpecies]) -> Vec<(IonSpecies, IonSpecies)> {
    let mut elements: Vec<(&str, f64)> = Vec::new();
    for s in pool {
        match elements.iter_mut().find(|e| e.0 == s.element()) {
            Some(e) => e.1 = e.1.min(s.mass),
            None => elements.push((s.element(), s.mass)),
        }
    }
    elements.sort_by(|a, b| a.1.total_cmp(&b.1));
    let by_mass = |element: &str, descending: bool| {
        let mut v: Vec<IonSpecies> = pool
            .iter()
            .filter(|s| s.element() == element)
            .cloned()
            .collect();
        v.sort_by(|a, b| a.mass.total_cmp(&b.mass));
        v.dedup_by(|a, b| a.label == b.label);
        if descending {
            v.reverse();
        }
        v
    };
    if elements.len() == 1 {
        return by_mass(elements[0].0, false)
            .into_iter()
            .map(|s| (s.clone(), s))
            .collect();
    }
    let mut pairs = Vec::new();
    for (i, light_el) in elements.iter().enumerate() {
        for heavy_el in &elements[i + 1..] {
            for heavy in by_mass(heavy_el.0, true) {
                for light in by_mass(light_el.0, false) {
                    pairs.push((light.clone(), heavy.clone()));
                }
            }
        }
    }
    pairs
}

fn layout_ions(layout: Layout, light: &IonSpecies, heavy: &IonSpecies) -> Vec<IonSpecies> {
    match layout {
        Layout::TwoIon => vec![light.clone(), heavy.clone()],
        Layout::LightOuter => vec![light.clone(), heavy.clone(), light.clone()],
        Layout::HeavyOuter => vec![heavy.clone(), light.clone(), heavy.clone()],
    }
}

fn scan_entry(
    layout: Layout,
    light: &IonSpecies,
    heavy: &IonSpecies,
    reference_frequency: f64,
) -> Result<ScanEntry> {
    let ions = layout_ions(layout, light, heavy);
    let config = CrystalConfig::new(ions.clone(), heavy.clone(), reference_frequency)?;
    let modes = normal_modes(&config)?;
    let coupling = lamb_dicke(&modes, &parallel_lasers(&modes, 1.0))?;
    let spectrum = sideband_spectrum(&modes, &coupling, 2)?;
    let heavy_ion = ions
        .iter()
        .position(|s| s.label == heavy.label)
        .unwrap_or(0);
    let light_ion = ions
        .iter()
        .position(|s| s.label != heavy.label)
        .unwrap_or(heavy_ion);
    let ip = modes.ip_frequency();
    let rows = modes
        .modes
        .iter()
        .map(|m| {
            let own = Combination::single(m.label, 1);
            let (margin, nearest) = spectrum
                .lines
                .iter()
                .filter(|l| l.combination != own)
                .map(|l| ((l.offset - m.frequency).abs(), l.combination.clone()))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .unwrap_or((f64::INFINITY, own.clone()));
            Ok(TableRow {
                configuration: config.name(),
                mode: m.label,
                ratio_reference: m.frequency / reference_frequency,
                ratio_ip: m.frequency / ip,
                b_heavy: m.eigenvector[heavy_ion],
                b_light: m.eigenvector[light_ion],
                eta_heavy: coupling.eta(heavy_ion, m.label)?,
                eta_light: coupling.eta(light_ion, m.label)?,
                margin,
                nearest,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanEntry {
        configuration: config.name(),
        layout,
        heavy: heavy.label.clone(),
        light: light.label.clone(),
        rows,
    })
}

/// Mode table for every species pair in `pool` and every requested layout,
/// with the heavy species at `reference_frequency`.
pub fn isotope_scan(
    pool: &[IonSpecies],
    layouts: &[Layout],
    reference_frequency: f64,
) -> Result<Vec<ScanEntry>> {
    if pool.is_empty() {
        return Err(Error::InvalidArgument("species pool is empty".into()));
    }
    let mut jobs: Vec<(Layout, IonSpecies, IonSpecies)> = Vec::new();
    for (light, heavy) in species_pairs(pool) {
        for &layout in layouts {
            // a same-species pair has only one three-ion chain
            if light.label == heavy.label
                && layout == Layout::HeavyOuter
                && layouts.contains(&Layout::LightOuter)
            {
                continue;
            }
            jobs.push((layout, light.clone(), heavy.clone()));
        }
    }
    jobs.par_iter()
        .map(|(layout, light, heavy)| scan_entry(*layout, light, heavy, reference_frequency))
        .collect()
}

/// Indices of `entries` ordered by largest minimum margin first.
pub fn rank_by_gap(entries: &[ScanEntry]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..entries.len()).collect();
    idx.sort_by(|&a, &b| {
        entries[b]
            .min_margin()
            .total_cmp(&entries[a].min_margin())
            .then(a.cmp(&b))
    });
    idx
}

/// A line within the advisory window of one of the drive tones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conflict {
    pub line: Combination,
    /// Distance from the nearer tone, rad/s.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub mode: ModeLabel,
    pub gate_time: f64,
    /// `δ = 2π/t_g`, rad/s.
    pub detuning: f64,
    /// Distance from either tone `ω_β ± δ` to the nearest other line, rad/s.
    pub margin: f64,
    pub nearest: Combination,
    pub conflicts: Vec<Conflict>,
    /// Ground-state second-order in-phase error for an out-of-phase gate in
    /// a two-ion dual-species crystal.
    pub epsilon_2xip: Option<f64>,
    /// Ions with no coupling to the mode.
    pub decoupled: Vec<usize>,
    pub min_eta: f64,
    /// Coupled and no line inside the window.
    pub passes: bool,
}

fn compare_recommendations(a: &Recommendation, b: &Recommendation) -> Ordering {
    let usable = |r: &Recommendation| r.decoupled.is_empty();
    usable(b)
        .cmp(&usable(a))
        .then_with(|| {
            let scale = a.margin.abs().max(b.margin.abs());
            if (a.margin - b.margin).abs() <= MARGIN_TIE * scale {
                Ordering::Equal
            } else {
                b.margin.total_cmp(&a.margin)
            }
        })
        .then_with(|| b.min_eta.total_cmp(&a.min_eta))
        .then_with(|| a.mode.cmp(&b.mode))
        .then_with(|| a.gate_time.total_cmp(&b.gate_time))
}

/// Ranks every (mode, gate time) candidate for a single-loop gate driving
/// all ions with parallel beams.
pub fn mode_advisor(
    crystal: &CrystalConfig,
    gate_times: &[f64],
    window: f64,
) -> Result<Vec<Recommendation>> {
    if gate_times.is_empty() || gate_times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::InvalidArgument("gate times must be positive".into()));
    }
    if !(window > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "window must be positive, got {window}"
        )));
    }
    let modes = normal_modes(crystal)?;
    let coupling = lamb_dicke(&modes, &parallel_lasers(&modes, 1.0))?;
    let spectrum = sideband_spectrum(&modes, &coupling, 2)?;
    let dual = two_ion_dual(crystal).is_ok();
    let candidates: Vec<(ModeLabel, f64, f64)> = modes
        .modes
        .iter()
        .flat_map(|m| gate_times.iter().map(move |&t| (m.label, m.frequency, t)))
        .collect();
    let mut out = candidates
        .par_iter()
        .map(|&(mode, freq, gate_time)| {
            let detuning = TAU / gate_time;
            let own = Combination::single(mode, 1);
            let mut distances: Vec<(f64, Combination)> = spectrum
                .lines
                .iter()
                .filter(|l| l.offset > 0.0 && l.combination != own)
                .map(|l| {
                    let d = (l.offset - freq - detuning)
                        .abs()
                        .min((l.offset - freq + detuning).abs());
                    (d, l.combination.clone())
                })
                .collect();
            distances.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
            let (margin, nearest) = distances.first().cloned().unwrap_or((f64::INFINITY, own));
            let conflicts: Vec<Conflict> = distances
                .iter()
                .take_while(|d| d.0 < window)
                .map(|d| Conflict {
                    line: d.1.clone(),
                    distance: d.0,
                })
                .collect();
            let entries = coupling.mode_entries(mode)?;
            let decoupled: Vec<usize> = entries
                .iter()
                .filter(|e| e.eta <= DECOUPLED_ETA)
                .map(|e| e.ion)
                .collect();
            let min_eta = entries.iter().map(|e| e.eta).fold(f64::INFINITY, f64::min);
            let epsilon_2xip = if dual && mode == ModeLabel::OOP {
                let ip = modes.ip_frequency();
                Some(error_2xip_at(crystal, ip, 0.0, detuning, 1)?.epsilon)
            } else {
                None
            };
            Ok(Recommendation {
                mode,
                gate_time,
                detuning,
                margin,
                nearest,
                passes: decoupled.is_empty() && conflicts.is_empty(),
                conflicts,
                epsilon_2xip,
                decoupled,
                min_eta,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(compare_recommendations);
    Ok(out)
}
