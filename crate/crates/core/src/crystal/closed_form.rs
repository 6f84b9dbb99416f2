//! Closed-form mode structure for two-ion and symmetric three-ion chains.

use super::{build_table, ModeTable};
use crate::species::{IonSpecies, CONSTANTS};

fn natural_length(mass: f64, frequency: f64) -> f64 {
    let e = CONSTANTS.elementary_charge;
    let k_e = 1.0 / (4.0 * std::f64::consts::PI * CONSTANTS.vacuum_permittivity);
    (k_e * e * e / (mass * frequency * frequency)).cbrt()
}

/// `ω_OOP / ω_IP` for a two-ion chain with mass ratio `mu`.
pub fn two_ion_frequency_ratio(mu: f64) -> f64 {
    let root = (1.0 - mu + mu * mu).sqrt();
    ((1.0 + mu + root) / (1.0 + mu - root)).sqrt()
}

/// In-phase amplitude of ion `j` in a two-ion chain, with `mu_tilde = m_i / m_j`
/// and `i` the other ion.
pub fn two_ion_ip_amplitude(mu_tilde: f64) -> f64 {
    let root = (1.0 - mu_tilde + mu_tilde * mu_tilde).sqrt();
    ((1.0 - mu_tilde + root) / (2.0 * root)).sqrt()
}

/// Two-ion chain ordered `(heavy, light)`.
///
/// `reference_frequency` is the single-ion axial frequency of `heavy` in the
/// same potential. Eigenvectors follow the first-ion-positive convention, so
/// the out-of-phase light-ion amplitude is negative.
pub fn closed_form_two_ion(
    heavy: &IonSpecies,
    light: &IonSpecies,
    reference_frequency: f64,
) -> ModeTable {
    let mu = heavy.mass / light.mass;
    let root = (1.0 - mu + mu * mu).sqrt();
    let w_ip = reference_frequency * (1.0 + mu - root).sqrt();
    let w_oop = w_ip * two_ion_frequency_ratio(mu);

    let b_heavy_ip = two_ion_ip_amplitude(light.mass / heavy.mass);
    let b_light_ip = two_ion_ip_amplitude(mu);
    let b_heavy_oop = (1.0 - b_heavy_ip * b_heavy_ip).max(0.0).sqrt();
    let b_light_oop = -(1.0 - b_light_ip * b_light_ip).max(0.0).sqrt();

    let a = 0.25f64.cbrt() * natural_length(heavy.mass, reference_frequency);
    build_table(
        vec![heavy.clone(), light.clone()],
        heavy.label.clone(),
        reference_frequency,
        vec![
            (w_ip, vec![b_heavy_ip, b_light_ip]),
            (w_oop, vec![b_heavy_oop, b_light_oop]),
        ],
        vec![-a, a],
        false,
    )
}

/// Squared frequencies `(ω_IP/ω_i)²` and `(ω_Alt/ω_i)²` for a symmetric
/// chain with `mu_tilde = m_outer / m_centre`.
pub fn three_ion_symmetric_frequencies_sq(mu_tilde: f64) -> (f64, f64) {
    let inv = 1.0 / mu_tilde;
    let root = (441.0 - 34.0 * inv + 169.0 * inv * inv).sqrt();
    (
        1.3 + (21.0 - root) / (10.0 * inv),
        1.3 + (21.0 + root) / (10.0 * inv),
    )
}

/// Symmetric chain `outer-center-outer`; `reference_frequency` is the
/// single-ion axial frequency of `outer`.
pub fn closed_form_three_ion_symmetric(
    outer: &IonSpecies,
    center: &IonSpecies,
    reference_frequency: f64,
) -> ModeTable {
    let mu_tilde = outer.mass / center.mass;
    let (ip_sq, alt_sq) = three_ion_symmetric_frequencies_sq(mu_tilde);
    let middle = |x_sq: f64| (13.0 - 5.0 * x_sq) / (8.0 * mu_tilde.sqrt());
    let normalized = |v: [f64; 3]| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect::<Vec<_>>()
    };

    let pairs = vec![
        (
            reference_frequency * ip_sq.sqrt(),
            normalized([1.0, middle(ip_sq), 1.0]),
        ),
        (
            reference_frequency * 3f64.sqrt(),
            normalized([1.0, 0.0, -1.0]),
        ),
        (
            reference_frequency * alt_sq.sqrt(),
            normalized([1.0, middle(alt_sq), 1.0]),
        ),
    ];
    let a = 1.25f64.cbrt() * natural_length(outer.mass, reference_frequency);
    build_table(
        vec![outer.clone(), center.clone(), outer.clone()],
        outer.label.clone(),
        reference_frequency,
        pairs,
        vec![-a, 0.0, a],
        true,
    )
}
