//! Reduced two-qubit density matrices.
//!
//! Basis order is `|00⟩, |01⟩, |10⟩, |11⟩` with the first qubit as the high
//! bit. `|0⟩` is the upper qubit level, so `σ+ = |0⟩⟨1|`.

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use serde::Serialize;

pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

/// `cos θ σx + sin θ σy`.
pub fn equatorial_pauli(theta: f64) -> Matrix2<Complex64> {
    Matrix2::new(
        Complex64::new(0.0, 0.0),
        Complex64::from_polar(1.0, -theta),
        Complex64::from_polar(1.0, theta),
        Complex64::new(0.0, 0.0),
    )
}

/// Kronecker product of two single-qubit operators.
pub fn kron2(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> Matrix4<Complex64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    pub rho: Matrix4<Complex64>,
}

/// Measured populations as the detection sees them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Populations {
    pub p00: f64,
    /// `P_01 + P_10`
    pub p1bright: f64,
    pub p11: f64,
}

impl Populations {
    pub fn total(&self) -> f64 {
        self.p00 + self.p1bright + self.p11
    }

    pub fn max_abs_diff(&self, other: &Populations) -> f64 {
        (self.p00 - other.p00)
            .abs()
            .max((self.p1bright - other.p1bright).abs())
            .max((self.p11 - other.p11).abs())
    }
}

impl TwoQubitState {
    pub fn from_pure(psi: &Vector4<Complex64>) -> Self {
        TwoQubitState {
            rho: psi * psi.adjoint(),
        }
    }

    /// `|11⟩`, the gate's starting state.
    pub fn initial() -> Self {
        let mut psi = Vector4::zeros();
        psi[3] = Complex64::new(1.0, 0.0);
        Self::from_pure(&psi)
    }

    /// `(|00⟩ + e^{iφ}|11⟩)/√2`
    pub fn bell(phase: f64) -> Self {
        Self::from_pure(&bell_vector(phase))
    }

    /// Bell populations with all two-qubit coherence removed.
    pub fn dephased_bell() -> Self {
        let mut rho = Matrix4::zeros();
        rho[(0, 0)] = Complex64::new(0.5, 0.0);
        rho[(3, 3)] = Complex64::new(0.5, 0.0);
        TwoQubitState { rho }
    }

    pub fn maximally_mixed() -> Self {
        TwoQubitState {
            rho: Matrix4::identity() * Complex64::new(0.25, 0.0),
        }
    }

    pub fn population(&self, index: usize) -> f64 {
        self.rho[(index, index)].re
    }

    pub fn populations(&self) -> Populations {
        Populations {
            p00: self.population(0),
            p1bright: self.population(1) + self.population(2),
            p11: self.population(3),
        }
    }

    /// `ρ_{00,11}`
    pub fn coherence(&self) -> Complex64 {
        self.rho[(0, 3)]
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.rho[(i, i)].re).sum()
    }

    pub fn conjugate(&self) -> Self {
        TwoQubitState {
            rho: self.rho.map(|z| z.conj()),
        }
    }

    pub fn transformed(&self, u: &Matrix4<Complex64>) -> Self {
        TwoQubitState {
            rho: u * self.rho * u.adjoint(),
        }
    }

    /// `⟨Φ_φ|ρ|Φ_φ⟩` computed directly from the density matrix.
    pub fn bell_overlap(&self, phase: f64) -> f64 {
        let v = bell_vector(phase);
        (v.adjoint() * self.rho * v)[(0, 0)].re
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Von Neumann entropy in nats. For a pure joint spin-motion state this is
    /// the spin-motion entanglement entropy.
    pub fn entropy(&self) -> f64 {
        self.eigenvalues()
            .into_iter()
            .filter(|&l| l > 0.0)
            .map(|l| -l * l.ln())
            .sum()
    }
}

fn bell_vector(phase: f64) -> Vector4<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Vector4::new(
        Complex64::new(s, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::from_polar(s, phase),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_state_has_half_populations() {
        let b = TwoQubitState::bell(0.3);
        let p = b.populations();
        assert!((p.p00 - 0.5).abs() < 1e-15 && (p.p11 - 0.5).abs() < 1e-15);
        assert!(p.p1bright.abs() < 1e-15);
        assert!((b.coherence().norm() - 0.5).abs() < 1e-15);
        assert!((b.bell_overlap(0.3) - 1.0).abs() < 1e-15);
        assert!(b.entropy().abs() < 1e-12);
    }

    #[test]
    fn mixed_state_entropy() {
        let m = TwoQubitState::maximally_mixed();
        assert!((m.entropy() - 4f64.ln()).abs() < 1e-12);
        assert!((m.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn equatorial_pauli_axes() {
        let x = equatorial_pauli(0.0);
        let y = equatorial_pauli(std::f64::consts::FRAC_PI_2);
        assert!((x[(0, 1)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((y[(0, 1)] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((y[(1, 0)] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn kron_places_first_qubit_high() {
        let x = equatorial_pauli(0.0);
        let id = Matrix2::identity();
        let x1 = kron2(&x, &id);
        // flips the first qubit: |11⟩ (3) -> |01⟩ (1)
        assert_eq!(x1[(1, 3)], Complex64::new(1.0, 0.0));
        assert_eq!(x1[(2, 3)], Complex64::new(0.0, 0.0));
    }
}
