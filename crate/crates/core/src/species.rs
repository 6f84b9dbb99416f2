//! Ion species registry and physical constants.
//!
//! Masses default to `mass_number × u`. Precise isotopic ion masses are
//! available through [`IonSpecies::with_precise_mass`] for sensitivity checks.
//!
//! | label  | A  | qubit λ | rel. S→D quadrupole element |
//! |--------|----|---------|-----------------------------|
//! | 40Ca+  | 40 | 729 nm  | 0.70                        |
//! | 43Ca+  | 43 | 729 nm  | 0.70                        |
//! | 86Sr+  | 86 | 674 nm  | 1.00                        |
//! | 88Sr+  | 88 | 674 nm  | 1.00                        |

use std::f64::consts::TAU;
use std::sync::LazyLock;

use serde::Serialize;

use crate::error::{Error, Result};

/// CODATA 2018 values, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub atomic_mass_unit: f64,
    pub vacuum_permittivity: f64,
    pub elementary_charge: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    atomic_mass_unit: 1.660_539_066_60e-27,
    vacuum_permittivity: 8.854_187_812_8e-12,
    elementary_charge: 1.602_176_634e-19,
};

const ELECTRON_MASS_U: f64 = 5.485_799_090_65e-4;

/// Measured heating rate, kept as a datum only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatingRate {
    pub quanta_per_second: f64,
    /// Angular trap frequency the rate was measured at, rad/s.
    pub trap_frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IonSpecies {
    pub label: String,
    pub mass_number: u32,
    /// kg
    pub mass: f64,
    /// m
    pub qubit_wavelength: f64,
    /// S→D quadrupole matrix element relative to Sr+.
    pub quad_matrix_element_rel: f64,
    pub heating_rate_ref: Option<HeatingRate>,
    /// Neutral-atom isotopic mass in u, used by `with_precise_mass`.
    #[serde(skip)]
    atomic_mass_u: f64,
}

impl IonSpecies {
    pub fn new(
        label: impl Into<String>,
        mass_number: u32,
        qubit_wavelength: f64,
        quad_matrix_element_rel: f64,
    ) -> Result<Self> {
        let label = label.into();
        let species = IonSpecies {
            mass: f64::from(mass_number) * CONSTANTS.atomic_mass_unit,
            atomic_mass_u: f64::from(mass_number),
            label,
            mass_number,
            qubit_wavelength,
            quad_matrix_element_rel,
            heating_rate_ref: None,
        };
        species.validate()?;
        Ok(species)
    }

    fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(self.mass) || !ok(self.qubit_wavelength) || !ok(self.quad_matrix_element_rel) {
            return Err(Error::InvalidArgument(format!(
                "species `{}` needs positive mass, wavelength and matrix element",
                self.label
            )));
        }
        Ok(())
    }

    /// Magnitude of the qubit-laser wavevector, rad/m.
    pub fn wavevector(&self) -> f64 {
        TAU / self.qubit_wavelength
    }

    /// Mass in atomic mass units.
    pub fn mass_u(&self) -> f64 {
        self.mass / CONSTANTS.atomic_mass_unit
    }

    /// Same species with its mass replaced by the isotopic ion mass
    /// (neutral atomic mass minus one electron).
    pub fn with_precise_mass(&self) -> Self {
        let mut s = self.clone();
        s.mass = (self.atomic_mass_u - ELECTRON_MASS_U) * CONSTANTS.atomic_mass_unit;
        s
    }

    /// Same species with an explicit mass in kg.
    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        let mut s = self.clone();
        s.mass = mass;
        s.validate()?;
        Ok(s)
    }

    pub fn with_wavelength(&self, wavelength: f64) -> Result<Self> {
        let mut s = self.clone();
        s.qubit_wavelength = wavelength;
        s.validate()?;
        Ok(s)
    }

    /// Chemical element part of the label ("40Ca+" -> "Ca").
    pub fn element(&self) -> &str {
        self.label
            .trim_start_matches(|c: char| c.is_ascii_digit())
            .trim_end_matches('+')
    }
}

const CA_WAVELENGTH: f64 = 729e-9;
const SR_WAVELENGTH: f64 = 674e-9;
const CA_MATRIX_ELEMENT: f64 = 0.70;

static REGISTRY: LazyLock<Vec<IonSpecies>> = LazyLock::new(|| {
    let entry = |label: &str, a: u32, atomic: f64, wl: f64, m: f64| IonSpecies {
        label: label.to_owned(),
        mass_number: a,
        mass: f64::from(a) * CONSTANTS.atomic_mass_unit,
        qubit_wavelength: wl,
        quad_matrix_element_rel: m,
        heating_rate_ref: None,
        atomic_mass_u: atomic,
    };
    let mut ca40 = entry(
        "40Ca+",
        40,
        39.962_590_850,
        CA_WAVELENGTH,
        CA_MATRIX_ELEMENT,
    );
    ca40.heating_rate_ref = Some(HeatingRate {
        quanta_per_second: 8.6,
        trap_frequency: TAU * 1.94e6,
    });
    vec![
        ca40,
        entry(
            "43Ca+",
            43,
            42.958_766_430,
            CA_WAVELENGTH,
            CA_MATRIX_ELEMENT,
        ),
        entry("86Sr+", 86, 85.909_260_730, SR_WAVELENGTH, 1.0),
        entry("88Sr+", 88, 87.905_612_500, SR_WAVELENGTH, 1.0),
    ]
});

/// All registered species, lightest first.
pub fn registry() -> &'static [IonSpecies] {
    &REGISTRY
}

pub fn lookup(label: &str) -> Result<IonSpecies> {
    let wanted = label.trim();
    REGISTRY
        .iter()
        .find(|s| s.label == wanted)
        .cloned()
        .ok_or_else(|| Error::UnknownSpecies(label.to_owned()))
}

/// `m_heavy / m_light`. Callers choose the operand order, so this also
/// serves as the per-ion ratio `m_i / m_j`.
pub fn mass_ratio(heavy: &IonSpecies, light: &IonSpecies) -> f64 {
    heavy.mass / light.mass
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_known_species() {
        let ca = lookup("40Ca+").unwrap();
        assert_eq!(ca.mass_number, 40);
        assert_eq!(ca.qubit_wavelength, 729e-9);
        assert_eq!(ca.element(), "Ca");
        let sr = lookup("88Sr+").unwrap();
        assert_eq!(sr.quad_matrix_element_rel, 1.0);
        assert_eq!(sr.qubit_wavelength, 674e-9);
    }

    #[test]
    fn lookup_unknown_species_names_label() {
        let err = lookup("41X+").unwrap_err();
        assert_eq!(err, Error::UnknownSpecies("41X+".into()));
        assert!(err.to_string().contains("41X+"));
    }

    #[test]
    fn mass_ratios() {
        let ca40 = lookup("40Ca+").unwrap();
        let ca43 = lookup("43Ca+").unwrap();
        let sr86 = lookup("86Sr+").unwrap();
        let sr88 = lookup("88Sr+").unwrap();
        assert!((mass_ratio(&sr88, &ca40) - 2.2).abs() < 1e-15);
        assert_eq!(mass_ratio(&ca40, &ca40), 1.0);
        assert!((mass_ratio(&sr86, &ca43) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn mass_ratio_reciprocal() {
        for a in registry() {
            for b in registry() {
                let p = mass_ratio(a, b) * mass_ratio(b, a);
                assert_eq!(p, 1.0, "{} {}", a.label, b.label);
            }
        }
    }

    #[test]
    fn lookups_are_repeatable() {
        for s in registry() {
            assert_eq!(lookup(&s.label).unwrap(), lookup(&s.label).unwrap());
        }
    }

    #[test]
    fn precise_mass_is_close_to_integer_mass() {
        for s in registry() {
            let p = s.with_precise_mass();
            assert!((p.mass / s.mass - 1.0).abs() < 2e-3);
            assert!(p.mass != s.mass);
        }
    }

    #[test]
    fn heating_rate_datum() {
        let ca = lookup("40Ca+").unwrap();
        let h = ca.heating_rate_ref.unwrap();
        assert_eq!(h.quanta_per_second, 8.6);
        assert!((h.trap_frequency / TAU - 1.94e6).abs() < 1e-6);
    }

    #[test]
    fn rejects_nonpositive_constants() {
        assert!(IonSpecies::new("X", 40, -1.0, 1.0).is_err());
        assert!(IonSpecies::new("X", 40, 700e-9, 0.0).is_err());
        let s = IonSpecies::new("X", 40, 700e-9, 1.0).unwrap();
        assert!(s.wavevector().is_finite() && s.wavevector() > 0.0);
    }
}
