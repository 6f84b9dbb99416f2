//! Axial equilibrium and normal modes of linear ion chains.
//!
//! The numerical route works for any chain of singly charged ions in a
//! harmonic axial well. The closed-form routes in [`closed_form`] cover the
//! two-ion and symmetric three-ion chains and serve as independent checks.

pub mod closed_form;
mod equilibrium;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::species::{self, IonSpecies, CONSTANTS};

pub use closed_form::{closed_form_three_ion_symmetric, closed_form_two_ion};
pub use equilibrium::equilibrium_positions;

pub const MAX_IONS: usize = 16;

/// Chain of ions along the trap axis plus the axial confinement.
///
/// The axial curvature is the same for every ion; it is pinned by requiring
/// `reference_species` alone to oscillate at `reference_frequency`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrystalConfig {
    pub ions: Vec<IonSpecies>,
    pub reference_species: IonSpecies,
    /// Single-ion axial angular frequency of the reference species, rad/s.
    pub reference_frequency: f64,
}

impl CrystalConfig {
    pub fn new(
        ions: Vec<IonSpecies>,
        reference_species: IonSpecies,
        reference_frequency: f64,
    ) -> Result<Self> {
        if ions.is_empty() {
            return Err(Error::InvalidCrystal("chain has no ions".into()));
        }
        if ions.len() > MAX_IONS {
            return Err(Error::InvalidCrystal(format!(
                "{} ions exceeds the supported maximum of {MAX_IONS}",
                ions.len()
            )));
        }
        if !(reference_frequency.is_finite() && reference_frequency > 0.0) {
            return Err(Error::InvalidCrystal(format!(
                "reference frequency must be positive, got {reference_frequency}"
            )));
        }
        Ok(CrystalConfig {
            ions,
            reference_species,
            reference_frequency,
        })
    }

    /// Build from registry labels, e.g. `["40Ca+", "88Sr+"]`.
    pub fn from_labels(labels: &[&str], reference: &str, reference_frequency: f64) -> Result<Self> {
        let ions = labels
            .iter()
            .map(|l| species::lookup(l))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ions, species::lookup(reference)?, reference_frequency)
    }

    pub fn len(&self) -> usize {
        self.ions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ions.is_empty()
    }

    /// Axial spring constant shared by all ions, N/m.
    pub fn curvature(&self) -> f64 {
        self.reference_species.mass * self.reference_frequency.powi(2)
    }

    /// Single-ion axial frequency of `species` in this potential.
    pub fn single_ion_frequency(&self, species: &IonSpecies) -> f64 {
        (self.curvature() / species.mass).sqrt()
    }

    /// Natural length `(e² / (4π ε₀ κ))^(1/3)`.
    pub fn length_scale(&self) -> f64 {
        let e = CONSTANTS.elementary_charge;
        let k_e = 1.0 / (4.0 * std::f64::consts::PI * CONSTANTS.vacuum_permittivity);
        (k_e * e * e / self.curvature()).cbrt()
    }

    /// Same chain with the confinement scaled so every frequency is multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.ions.clone(),
            self.reference_species.clone(),
            self.reference_frequency * factor,
        )
    }

    /// Chain in reverse order.
    pub fn reversed(&self) -> Self {
        let mut c = self.clone();
        c.ions.reverse();
        c
    }

    /// Outer ions equal and chain length three.
    pub fn is_symmetric_three(&self) -> bool {
        self.ions.len() == 3 && self.ions[0] == self.ions[2]
    }

    /// Name like `40Ca+-88Sr+`.
    pub fn name(&self) -> String {
        self.ions
            .iter()
            .map(|s| s.label.as_str())
            .collect::<Vec<_>>()
            .join("-")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModeLabel {
    IP,
    OOP,
    Stretch,
    Alt,
    /// 1-based position in the ascending frequency list.
    Numbered(usize),
}

impl ModeLabel {
    pub fn long_name(&self) -> String {
        match self {
            ModeLabel::IP => "In-phase".into(),
            ModeLabel::OOP => "Out-of-phase".into(),
            ModeLabel::Stretch => "Stretch".into(),
            ModeLabel::Alt => "Alternating".into(),
            ModeLabel::Numbered(n) => format!("Mode {n}"),
        }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeLabel::IP => f.write_str("IP"),
            ModeLabel::OOP => f.write_str("OOP"),
            ModeLabel::Stretch => f.write_str("Stretch"),
            ModeLabel::Alt => f.write_str("Alt"),
            ModeLabel::Numbered(n) => write!(f, "mode{n}"),
        }
    }
}

impl FromStr for ModeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Ok(match lower.as_str() {
            "ip" | "in-phase" | "inphase" => ModeLabel::IP,
            "oop" | "out-of-phase" | "outofphase" => ModeLabel::OOP,
            "stretch" | "breathing" => ModeLabel::Stretch,
            "alt" | "alternating" => ModeLabel::Alt,
            other => other
                .strip_prefix("mode")
                .and_then(|n| n.trim().parse::<usize>().ok())
                .filter(|&n| n > 0)
                .map(ModeLabel::Numbered)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown mode label `{s}`")))?,
        })
    }
}

impl Serialize for ModeLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mode {
    pub label: ModeLabel,
    /// Angular frequency, rad/s.
    pub frequency: f64,
    /// Unit-norm mass-weighted amplitudes, one per ion.
    pub eigenvector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeTable {
    pub ions: Vec<IonSpecies>,
    /// Single-ion frequency of the reference species (rad/s).
    pub reference_frequency: f64,
    pub reference_label: String,
    /// Ascending in frequency.
    pub modes: Vec<Mode>,
    /// Axial positions in meters, strictly increasing.
    pub equilibrium_positions: Vec<f64>,
}

impl ModeTable {
    pub fn mode(&self, label: ModeLabel) -> Result<&Mode> {
        self.modes
            .iter()
            .find(|m| m.label == label)
            .ok_or(Error::UnknownMode(label))
    }

    pub fn mode_index(&self, label: ModeLabel) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m.label == label)
            .ok_or(Error::UnknownMode(label))
    }

    /// Lowest (in-phase) mode frequency.
    pub fn ip_frequency(&self) -> f64 {
        self.modes[0].frequency
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.frequency).collect()
    }
}

/// Assign labels to modes already sorted ascending.
fn assign_labels(eigenvectors: &[Vec<f64>], symmetric_three: bool) -> Vec<ModeLabel> {
    let n = eigenvectors.len();
    match n {
        1 => vec![ModeLabel::IP],
        2 => vec![ModeLabel::IP, ModeLabel::OOP],
        3 if symmetric_three => {
            // The antisymmetric mode leaves the centre ion at rest.
            let stretch = eigenvectors
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    let sa = a[1].abs() + (a[0] + a[2]).abs();
                    let sb = b[1].abs() + (b[0] + b[2]).abs();
                    sa.total_cmp(&sb)
                })
                .map(|(i, _)| i)
                .unwrap_or(1);
            let mut labels = Vec::with_capacity(3);
            let mut seen_symmetric = false;
            for i in 0..3 {
                if i == stretch {
                    labels.push(ModeLabel::Stretch);
                } else if !seen_symmetric {
                    labels.push(ModeLabel::IP);
                    seen_symmetric = true;
                } else {
                    labels.push(ModeLabel::Alt);
                }
            }
            labels
        }
        _ => (0..n)
            .map(|i| {
                if i == 0 {
                    ModeLabel::IP
                } else {
                    ModeLabel::Numbered(i + 1)
                }
            })
            .collect(),
    }
}

/// Flip so the first non-negligible amplitude is positive.
pub(crate) fn canonical_sign(v: &mut [f64]) {
    // amplitudes at rounding level are nodes of the mode (e.g. the stretch centre)
    for x in v.iter_mut() {
        if x.abs() < 1e-13 {
            *x = 0.0;
        }
    }
    if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-12) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Sort eigenpairs ascending; ties broken lexicographically on the eigenvector.
pub(crate) fn sort_eigenpairs(pairs: &mut [(f64, Vec<f64>)]) {
    pairs.sort_by(|(la, va), (lb, vb)| {
        let scale = la.abs().max(lb.abs()).max(1.0);
        if (la - lb).abs() <= 1e-12 * scale {
            va.iter()
                .zip(vb)
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        } else {
            la.total_cmp(lb)
        }
    });
}

pub(crate) fn build_table(
    ions: Vec<IonSpecies>,
    reference_label: String,
    reference_frequency: f64,
    mut pairs: Vec<(f64, Vec<f64>)>,
    positions: Vec<f64>,
    symmetric_three: bool,
) -> ModeTable {
    pairs.iter_mut().for_each(|(_, v)| canonical_sign(v));
    sort_eigenpairs(&mut pairs);
    let vectors: Vec<Vec<f64>> = pairs.iter().map(|(_, v)| v.clone()).collect();
    let labels = assign_labels(&vectors, symmetric_three);
    let modes = pairs
        .into_iter()
        .zip(labels)
        .map(|((frequency, eigenvector), label)| Mode {
            label,
            frequency,
            eigenvector,
        })
        .collect();
    ModeTable {
        ions,
        reference_frequency,
        reference_label,
        modes,
        equilibrium_positions: positions,
    }
}

/// Axial normal modes from the mass-weighted Hessian at equilibrium.
pub fn normal_modes(config: &CrystalConfig) -> Result<ModeTable> {
    let u = equilibrium::solve_dimensionless(config.len())?;
    let hessian = equilibrium::hessian(&u);
    let n = config.len();
    let rel: Vec<f64> = config
        .ions
        .iter()
        .map(|s| s.mass / config.reference_species.mass)
        .collect();
    let weighted = DMatrix::from_fn(n, n, |i, j| hessian[(i, j)] / (rel[i] * rel[j]).sqrt());
    let eig = SymmetricEigen::new(weighted);

    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = eig.eigenvalues[k];
        if lambda <= 0.0 || !lambda.is_finite() {
            return Err(Error::AntiConfining(lambda));
        }
        let v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        pairs.push((config.reference_frequency * lambda.sqrt(), v));
    }

    let ell = config.length_scale();
    let positions = u.iter().map(|x| x * ell).collect();
    Ok(build_table(
        config.ions.clone(),
        config.reference_species.label.clone(),
        config.reference_frequency,
        pairs,
        positions,
        config.is_symmetric_three(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn khz(f: f64) -> f64 {
        TAU * f * 1e3
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn single_ion() {
        let c = CrystalConfig::from_labels(&["88Sr+"], "88Sr+", khz(660.0)).unwrap();
        let t = normal_modes(&c).unwrap();
        assert_eq!(t.modes.len(), 1);
        assert!((t.modes[0].frequency / c.reference_frequency - 1.0).abs() < 1e-14);
        assert_eq!(t.modes[0].eigenvector, vec![1.0]);
        assert_eq!(t.equilibrium_positions, vec![0.0]);
    }

    #[test]
    fn two_identical_ions() {
        let c = CrystalConfig::from_labels(&["40Ca+", "40Ca+"], "40Ca+", khz(1000.0)).unwrap();
        let t = normal_modes(&c).unwrap();
        let w = c.reference_frequency;
        assert!((t.modes[0].frequency / w - 1.0).abs() < 1e-12);
        assert!((t.modes[1].frequency / w - 3f64.sqrt()).abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (a, b) in t.modes[0].eigenvector.iter().zip([h, h]) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in t.modes[1].eigenvector.iter().zip([h, -h]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(t.modes[0].label, ModeLabel::IP);
        assert_eq!(t.modes[1].label, ModeLabel::OOP);
    }

    #[test]
    fn ca_sr_pair_matches_table_values() {
        let c = CrystalConfig::from_labels(&["40Ca+", "88Sr+"], "88Sr+", khz(660.0)).unwrap();
        let t = normal_modes(&c).unwrap();
        let w = c.reference_frequency;
        assert!((t.modes[0].frequency / w - 1.137).abs() < 1e-3);
        assert!((t.modes[1].frequency / w - 2.260).abs() < 1e-3);
        let ip = &t.modes[0].eigenvector;
        let oop = &t.modes[1].eigenvector;
        assert!((ip[0].abs() - 0.431).abs() < 1e-3 && (ip[1].abs() - 0.902).abs() < 1e-3);
        assert!((oop[0].abs() - 0.902).abs() < 1e-3 && (oop[1].abs() - 0.431).abs() < 1e-3);
        assert!(oop[0] > 0.0 && oop[1] < 0.0);
    }

    #[test]
    fn sr_ca_sr_labels_and_stretch() {
        let c =
            CrystalConfig::from_labels(&["88Sr+", "40Ca+", "88Sr+"], "88Sr+", khz(660.0)).unwrap();
        let t = normal_modes(&c).unwrap();
        let w = c.reference_frequency;
        let expect = [
            (ModeLabel::IP, 1.095),
            (ModeLabel::Stretch, 1.732),
            (ModeLabel::Alt, 3.262),
        ];
        for (m, (label, ratio)) in t.modes.iter().zip(expect) {
            assert_eq!(m.label, label);
            assert!((m.frequency / w - ratio).abs() < 1e-3, "{label}");
        }
        let stretch = t.mode(ModeLabel::Stretch).unwrap();
        assert_eq!(stretch.eigenvector[1], 0.0);
    }

    #[test]
    fn heavy_centre_puts_alternating_below_stretch() {
        // centre/outer mass ratio 88/10 > 5.25
        let light = IonSpecies::new("10X+", 10, 700e-9, 1.0).unwrap();
        let heavy = species::lookup("88Sr+").unwrap();
        let c = CrystalConfig::new(vec![light.clone(), heavy, light.clone()], light, 1e6).unwrap();
        let t = normal_modes(&c).unwrap();
        let labels: Vec<_> = t.modes.iter().map(|m| m.label).collect();
        assert_eq!(
            labels,
            vec![ModeLabel::IP, ModeLabel::Alt, ModeLabel::Stretch]
        );
    }

    #[test]
    fn asymmetric_three_ion_chain_is_numbered() {
        let c = CrystalConfig::from_labels(&["40Ca+", "88Sr+", "43Ca+"], "88Sr+", 1e6).unwrap();
        let t = normal_modes(&c).unwrap();
        let labels: Vec<_> = t.modes.iter().map(|m| m.label).collect();
        assert_eq!(
            labels,
            vec![
                ModeLabel::IP,
                ModeLabel::Numbered(2),
                ModeLabel::Numbered(3)
            ]
        );
    }

    #[test]
    fn long_chain_invariants() {
        let labels = [
            "40Ca+", "88Sr+", "43Ca+", "86Sr+", "40Ca+", "88Sr+", "40Ca+", "43Ca+",
        ];
        let c = CrystalConfig::from_labels(&labels, "88Sr+", khz(500.0)).unwrap();
        let t = normal_modes(&c).unwrap();
        for (i, m) in t.modes.iter().enumerate() {
            assert!((dot(&m.eigenvector, &m.eigenvector) - 1.0).abs() < 1e-12);
            assert!(m.eigenvector[0] >= 0.0);
            for other in &t.modes[i + 1..] {
                assert!(dot(&m.eigenvector, &other.eigenvector).abs() < 1e-10);
                assert!(other.frequency > m.frequency);
            }
        }
        assert!(t.equilibrium_positions.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn label_round_trip() {
        for l in [
            ModeLabel::IP,
            ModeLabel::OOP,
            ModeLabel::Stretch,
            ModeLabel::Alt,
            ModeLabel::Numbered(4),
        ] {
            assert_eq!(l.to_string().parse::<ModeLabel>().unwrap(), l);
        }
        assert_eq!("In-phase".parse::<ModeLabel>().unwrap(), ModeLabel::IP);
        assert!("sideways".parse::<ModeLabel>().is_err());
    }

    #[test]
    fn config_validation() {
        let sr = species::lookup("88Sr+").unwrap();
        assert!(CrystalConfig::new(vec![], sr.clone(), 1.0).is_err());
        assert!(CrystalConfig::new(vec![sr.clone()], sr.clone(), 0.0).is_err());
        assert!(CrystalConfig::new(vec![sr.clone(); 17], sr.clone(), 1.0).is_err());
        assert!(CrystalConfig::new(vec![sr.clone(); 16], sr, 1.0).is_ok());
    }
}
