//! Lamb-Dicke parameters and sideband Rabi frequencies per ion and mode.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::crystal::{ModeLabel, ModeTable};
use crate::error::{Error, Result};
use crate::species::{IonSpecies, CONSTANTS};

/// Above this the first-order Lamb-Dicke expansion is unreliable.
pub const LAMB_DICKE_WARN: f64 = 0.3;

/// Qubit laser addressing one species. Only the projection of the wavevector
/// onto the trap axis matters for axial modes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaserField {
    pub species: String,
    /// `k·ẑ`, rad/m, signed.
    pub wavevector_projection: f64,
    pub intensity_rel: f64,
    /// Carrier Rabi frequency Ω, rad/s.
    pub carrier_rabi: f64,
}

impl LaserField {
    /// Beam along +z with the full wavevector of the species.
    pub fn parallel(species: &IonSpecies, carrier_rabi: f64) -> Self {
        LaserField {
            species: species.label.clone(),
            wavevector_projection: species.wavevector(),
            intensity_rel: 1.0,
            carrier_rabi,
        }
    }

    /// Beam with axis cosine `projection` and Ω derived as
    /// `Ω_ref · √I · M_rel`.
    pub fn from_intensity(
        species: &IonSpecies,
        projection: f64,
        intensity_rel: f64,
        reference_rabi: f64,
    ) -> Result<Self> {
        if !(-1.0..=1.0).contains(&projection) {
            return Err(Error::InvalidLaser {
                species: species.label.clone(),
                reason: format!("axis cosine {projection} outside [-1, 1]"),
            });
        }
        if intensity_rel < 0.0 || reference_rabi < 0.0 {
            return Err(Error::InvalidLaser {
                species: species.label.clone(),
                reason: "intensity and reference Rabi frequency must be non-negative".into(),
            });
        }
        Ok(LaserField {
            species: species.label.clone(),
            wavevector_projection: projection * species.wavevector(),
            intensity_rel,
            carrier_rabi: reference_rabi * intensity_rel.sqrt() * species.quad_matrix_element_rel,
        })
    }

    fn validate(&self, species: &IonSpecies) -> Result<()> {
        let k = species.wavevector();
        if self.wavevector_projection.abs() > k * (1.0 + 1e-12) {
            return Err(Error::InvalidLaser {
                species: self.species.clone(),
                reason: format!(
                    "|k·z| = {:e} exceeds 2π/λ = {k:e}",
                    self.wavevector_projection.abs()
                ),
            });
        }
        if !(self.carrier_rabi >= 0.0) {
            return Err(Error::InvalidLaser {
                species: self.species.clone(),
                reason: "carrier Rabi frequency must be non-negative".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingEntry {
    pub ion: usize,
    pub species: String,
    pub mode: ModeLabel,
    /// `|k·z| z_RMS |b|`
    pub eta: f64,
    /// `(k·z) z_RMS b`, carrying the beam direction and eigenvector sign.
    pub signed_eta: f64,
    /// `√(ħ / 2 m ω)`, m
    pub ground_state_extent: f64,
    /// `η Ω`, rad/s
    pub sideband_rabi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingTable {
    pub ions: Vec<IonSpecies>,
    pub modes: Vec<(ModeLabel, f64)>,
    /// Laser acting on each ion, in chain order.
    pub lasers: Vec<LaserField>,
    /// Ion-major: entry `ion * modes.len() + mode_index`.
    pub entries: Vec<CouplingEntry>,
}

impl CouplingTable {
    pub fn entry(&self, ion: usize, mode: ModeLabel) -> Result<&CouplingEntry> {
        let m = self
            .modes
            .iter()
            .position(|(l, _)| *l == mode)
            .ok_or(Error::UnknownMode(mode))?;
        self.entries
            .get(ion * self.modes.len() + m)
            .ok_or_else(|| Error::InvalidArgument(format!("ion index {ion} out of range")))
    }

    pub fn eta(&self, ion: usize, mode: ModeLabel) -> Result<f64> {
        Ok(self.entry(ion, mode)?.eta)
    }

    pub fn mode_frequency(&self, mode: ModeLabel) -> Result<f64> {
        self.modes
            .iter()
            .find(|(l, _)| *l == mode)
            .map(|(_, w)| *w)
            .ok_or(Error::UnknownMode(mode))
    }

    pub fn mode_entries(&self, mode: ModeLabel) -> Result<Vec<&CouplingEntry>> {
        (0..self.ions.len()).map(|i| self.entry(i, mode)).collect()
    }

    /// Largest η in the table.
    pub fn max_eta(&self) -> f64 {
        self.entries.iter().map(|e| e.eta).fold(0.0, f64::max)
    }

    pub fn exceeds_lamb_dicke(&self) -> bool {
        self.max_eta() > LAMB_DICKE_WARN
    }
}

/// Lamb-Dicke parameter `η_{j,β} = √(ħ / 2 m_j ω_β) (k_j·ẑ) b_{j,β}` for
/// every ion and mode. `lasers` needs one entry per species present.
pub fn lamb_dicke(modes: &ModeTable, lasers: &[LaserField]) -> Result<CouplingTable> {
    let per_ion = modes
        .ions
        .iter()
        .map(|s| {
            let laser = lasers
                .iter()
                .find(|l| l.species == s.label)
                .ok_or_else(|| Error::MissingLaser(s.label.clone()))?;
            laser.validate(s)?;
            Ok(laser.clone())
        })
        .collect::<Result<Vec<_>>>()?;

    let mut entries = Vec::with_capacity(modes.ions.len() * modes.modes.len());
    for (ion, (species, laser)) in modes.ions.iter().zip(&per_ion).enumerate() {
        for mode in &modes.modes {
            let extent = (CONSTANTS.hbar / (2.0 * species.mass * mode.frequency)).sqrt();
            let b = mode.eigenvector[ion];
            let signed_eta = laser.wavevector_projection * extent * b;
            let eta = laser.wavevector_projection.abs() * extent * b.abs();
            entries.push(CouplingEntry {
                ion,
                species: species.label.clone(),
                mode: mode.label,
                eta,
                signed_eta,
                ground_state_extent: extent,
                sideband_rabi: eta * laser.carrier_rabi,
            });
        }
    }
    let table = CouplingTable {
        ions: modes.ions.clone(),
        modes: modes.modes.iter().map(|m| (m.label, m.frequency)).collect(),
        lasers: per_ion,
        entries,
    };
    if table.exceeds_lamb_dicke() {
        log::warn!(
            "Lamb-Dicke parameter {:.3} exceeds {LAMB_DICKE_WARN}; first-order expansion degrades",
            table.max_eta()
        );
    }
    Ok(table)
}

/// Relative intensities per species so that every ion has `η Ω = target`
/// on `mode`, using `Ω = Ω_ref √I M_rel`.
pub fn equalize_sideband_rabi(
    coupling: &CouplingTable,
    mode: ModeLabel,
    target_product: f64,
    reference_rabi: f64,
) -> Result<BTreeMap<String, f64>> {
    if !(target_product >= 0.0) || !(reference_rabi > 0.0) {
        return Err(Error::InvalidArgument(
            "target product must be non-negative and reference Rabi frequency positive".into(),
        ));
    }
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for entry in coupling.mode_entries(mode)? {
        if entry.eta <= 0.0 {
            return Err(Error::DecoupledIon {
                ion: entry.ion,
                species: entry.species.clone(),
                mode,
            });
        }
        let species = &coupling.ions[entry.ion];
        let rabi = target_product / entry.eta;
        let intensity = (rabi / (reference_rabi * species.quad_matrix_element_rel)).powi(2);
        match out.get(&species.label) {
            Some(&prev) if (prev - intensity).abs() > 1e-9 * prev.max(intensity) => {
                return Err(Error::IncompatibleIntensities(species.label.clone()));
            }
            Some(_) => {}
            None => {
                out.insert(species.label.clone(), intensity);
            }
        }
    }
    Ok(out)
}

/// Lasers with the same beam geometry as `coupling` but the given intensities.
pub fn lasers_with_intensities(
    coupling: &CouplingTable,
    intensities: &BTreeMap<String, f64>,
    reference_rabi: f64,
) -> Result<Vec<LaserField>> {
    let mut out: Vec<LaserField> = Vec::new();
    for (species, laser) in coupling.ions.iter().zip(&coupling.lasers) {
        if out.iter().any(|l| l.species == species.label) {
            continue;
        }
        let intensity = *intensities
            .get(&species.label)
            .ok_or_else(|| Error::MissingLaser(species.label.clone()))?;
        let cosine = laser.wavevector_projection / species.wavevector();
        out.push(LaserField::from_intensity(
            species,
            cosine.clamp(-1.0, 1.0),
            intensity,
            reference_rabi,
        )?);
    }
    Ok(out)
}

/// One parallel beam per distinct species in `modes`, each with carrier Rabi
/// frequency `carrier_rabi`.
pub fn parallel_lasers(modes: &ModeTable, carrier_rabi: f64) -> Vec<LaserField> {
    let mut out: Vec<LaserField> = Vec::new();
    for s in &modes.ions {
        if !out.iter().any(|l| l.species == s.label) {
            out.push(LaserField::parallel(s, carrier_rabi));
        }
    }
    out
}
