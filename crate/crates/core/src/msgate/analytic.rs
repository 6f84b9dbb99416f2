//! Closed-form propagator of the Lamb-Dicke gate Hamiltonian
//! `H = −r(t) S (a e^{−iδt} + a† e^{iδt})` with `S = Σ_j η_j Ω_j σ_θj`.
//!
//! Because `S` is time independent the propagator is exactly
//! `U(t) = D(α(t) S) exp(iΦ(t) S²)` with `α = i∫r e^{iδt}` and
//! `Φ = ∫ r(t₁) Im(e^{iδt₁} ∫₀^{t₁} r e^{−iδt₂} dt₂) dt₁`.

use std::f64::consts::FRAC_PI_2;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;

use super::state::{equatorial_pauli, kron2, TwoQubitState, I};
use super::{thermal_weights, EnvelopePiece, GateParams, Ramp};
use crate::error::{Error, Result};

const QUADRATURE_NODES: usize = 16;

/// `∫_a^b e^{iws} ds`
fn exp_integral(w: f64, a: f64, b: f64) -> Complex64 {
    let len = b - a;
    let x = w * len;
    if x.abs() < 1e-8 {
        return Complex64::from_polar(1.0, w * a) * len * Complex64::new(1.0, x / 2.0);
    }
    let half = (x / 2.0).sin();
    let numer = Complex64::new(-2.0 * half * half, x.sin());
    Complex64::from_polar(1.0, w * a) * numer / (I * w)
}

/// `∫_a^b (c0 + c1 cos(k s + p)) e^{iws} ds`
fn piece_integral(piece: &EnvelopePiece, w: f64, a: f64, b: f64) -> Complex64 {
    let mut total = exp_integral(w, a, b) * piece.c0;
    if piece.c1 != 0.0 {
        let up = Complex64::from_polar(1.0, piece.p) * exp_integral(w + piece.k, a, b);
        let down = Complex64::from_polar(1.0, -piece.p) * exp_integral(w - piece.k, a, b);
        total += (up + down) * (piece.c1 / 2.0);
    }
    total
}

/// `∫₀^t r(s) e^{iws} ds` for envelope `pieces` covering `[0, t]`.
fn envelope_transform(pieces: &[EnvelopePiece], w: f64, t: f64) -> Complex64 {
    pieces
        .iter()
        .take_while(|p| p.start < t)
        .map(|p| piece_integral(p, w, p.start, p.end.min(t)))
        .sum()
}

/// `(α(t), Φ(t))` per unit spin operator: the displacement is `α S` and the
/// geometric phase `Φ S²`.
pub fn loop_integrals(params: &GateParams, t: f64) -> (Complex64, f64) {
    let delta = params.detuning;
    match params.ramp {
        Ramp::None => {
            let x = delta * t;
            let alpha = Complex64::new(-2.0 * (x / 2.0).sin().powi(2), x.sin()) / delta;
            // t/δ − sin(δt)/δ², written to avoid cancellation at small δt
            let phi = if x.abs() < 1e-3 {
                t * t * x / 6.0 * (1.0 - x * x / 20.0)
            } else {
                (x - x.sin()) / (delta * delta)
            };
            (alpha, phi)
        }
        ramp => {
            let pieces = ramp.pieces(t, params.gate_time);
            (
                I * envelope_transform(&pieces, delta, t),
                phase_by_quadrature(&pieces, delta, t),
            )
        }
    }
}

fn phase_by_quadrature(pieces: &[EnvelopePiece], delta: f64, t: f64) -> f64 {
    let rule = GaussLegendre::new(NonZeroUsize::new(QUADRATURE_NODES).unwrap());
    let mut total = 0.0;
    for piece in pieces {
        let (a, b) = (piece.start, piece.end.min(t));
        if b <= a {
            continue;
        }
        let fastest = delta.abs().max(piece.k.abs()).max(1e-300);
        let panels = ((b - a) * fastest / FRAC_PI_2).ceil().max(1.0) as usize;
        let width = (b - a) / panels as f64;
        for k in 0..panels {
            let lo = a + k as f64 * width;
            total += rule.integrate(lo, lo + width, |t1| {
                let beta = envelope_transform(pieces, -delta, t1);
                piece.value(t1) * (Complex64::from_polar(1.0, delta * t1) * beta).im
            });
        }
    }
    total
}

/// Spin operator `S = Σ_j η_j Ω_j σ_θj` on the two driven qubits.
pub(crate) fn spin_operator(params: &GateParams) -> Result<Matrix4<Complex64>> {
    let id = Matrix2::identity();
    let s0 = equatorial_pauli(params.drive_axis(0)) * Complex64::from(params.sideband_product(0)?);
    let s1 = equatorial_pauli(params.drive_axis(1)) * Complex64::from(params.sideband_product(1)?);
    Ok(kron2(&s0, &id) + kron2(&id, &s1))
}

/// `e^{−x/2} Σ_n p_n L_n(x)`, the thermal characteristic function at
/// `|β|² = x`.
fn weighted_laguerre(x: f64, weights: &[f64]) -> f64 {
    let norm: f64 = weights.iter().sum();
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut total = 0.0;
    for (n, w) in weights.iter().enumerate() {
        if n == 1 {
            prev = 1.0;
            cur = 1.0 - x;
        } else if n > 1 {
            let k = (n - 1) as f64;
            let next = ((2.0 * k + 1.0 - x) * cur - k * prev) / (k + 1.0);
            prev = cur;
            cur = next;
        }
        total += w * cur;
    }
    (-x / 2.0).exp() * total / norm
}

fn reduced_state(params: &GateParams, t: f64, weights: &[f64]) -> Result<TwoQubitState> {
    params.validate()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time must be non-negative, got {t}"
        )));
    }
    let eig = SymmetricEigen::new(spin_operator(params)?);
    let (alpha, phi) = loop_integrals(params, t);
    let psi0 = Vector4::new(
        Complex64::from(0.0),
        Complex64::from(0.0),
        Complex64::from(0.0),
        Complex64::from(1.0),
    );
    let c = eig.eigenvectors.adjoint() * psi0;
    let lambda = eig.eigenvalues;
    let rho_eig = Matrix4::from_fn(|s, r| {
        let diff = lambda[s] - lambda[r];
        let x = (alpha * diff).norm_sqr();
        let phase = Complex64::from_polar(1.0, phi * (lambda[s].powi(2) - lambda[r].powi(2)));
        c[s] * c[r].conj() * phase * weighted_laguerre(x, weights)
    });
    Ok(TwoQubitState {
        rho: eig.eigenvectors * rho_eig * eig.eigenvectors.adjoint(),
    })
}

/// Reduced two-qubit state at time `t`, starting from `|11⟩` with the gate
/// mode in a thermal state of mean occupation `params.nbar(mode)`.
pub fn propagate_analytic(params: &GateParams, t: f64) -> Result<TwoQubitState> {
    let weights = thermal_weights(params.nbar(params.mode), usize::MAX);
    reduced_state(params, t, &weights)
}

/// As [`propagate_analytic`] with the gate mode starting in Fock state `n`.
pub fn propagate_analytic_fock(params: &GateParams, t: f64, n: usize) -> Result<TwoQubitState> {
    let mut weights = vec![0.0; n + 1];
    weights[n] = 1.0;
    reduced_state(params, t, &weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::ModeLabel;
    use crate::msgate::tests::coupling;
    use crate::msgate::{calibrate_gate, calibrate_gate_on, with_compensated_ramp};
    use std::f64::consts::{PI, TAU};

    fn ca_ca() -> GateParams {
        calibrate_gate(
            &coupling(&["40Ca+", "40Ca+"], "40Ca+", 1e6),
            ModeLabel::IP,
            71e-6,
            1,
        )
        .unwrap()
    }

    #[test]
    fn laguerre_sum_matches_thermal_closed_form() {
        for nbar in [0.0, 0.5, 2.0, 7.0] {
            let w = thermal_weights(nbar, usize::MAX);
            for x in [0.0, 0.1, 0.7, 2.0] {
                let want = (-x * (nbar + 0.5)).exp();
                assert!(
                    (weighted_laguerre(x, &w) - want).abs() < 1e-9,
                    "nbar {nbar} x {x}"
                );
            }
        }
    }

    #[test]
    fn starts_in_11() {
        let p = propagate_analytic(&ca_ca(), 0.0).unwrap().populations();
        assert!(p.p00.abs() < 1e-15 && p.p1bright.abs() < 1e-15);
        assert!((p.p11 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn calibrated_gate_makes_bell_state() {
        let p = ca_ca();
        let s = propagate_analytic(&p, p.gate_time).unwrap();
        let pop = s.populations();
        assert!((pop.p00 - 0.5).abs() < 1e-12 && (pop.p11 - 0.5).abs() < 1e-12);
        assert!(pop.p1bright < 1e-12);
        assert!((s.bell_overlap(p.bell_phase) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bell_phase_follows_target() {
        let mut p = ca_ca();
        for phi in [0.0, 0.4, PI / 2.0, -2.0] {
            p.bell_phase = phi;
            let s = propagate_analytic(&p, p.gate_time).unwrap();
            assert!((s.bell_overlap(phi) - 1.0).abs() < 1e-12, "phi {phi}");
        }
    }

    #[test]
    fn loop_closes_for_any_strength() {
        let mut p = ca_ca();
        for k in 1..=4 {
            for scale in [0.3, 1.0, 2.7] {
                p.loops = k;
                p.gate_time = TAU * f64::from(k) / p.detuning;
                let base = p.clone();
                for d in &mut p.drives {
                    d.carrier_rabi *= scale;
                }
                let s = propagate_analytic(&p, p.gate_time).unwrap();
                assert!(s.entropy() < 1e-9, "K {k} scale {scale}");
                p = base;
            }
        }
    }

    #[test]
    fn populations_sum_to_one() {
        let mut p = ca_ca();
        p.set_nbar(ModeLabel::IP, 2.0);
        for i in 0..50 {
            let t = p.gate_time * i as f64 / 37.0;
            let s = propagate_analytic(&p, t).unwrap();
            assert!((s.populations().total() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn thermal_insensitive_at_gate_time() {
        let mut p = ca_ca();
        let f0 = propagate_analytic(&p, p.gate_time)
            .unwrap()
            .bell_overlap(p.bell_phase);
        for nbar in [0.5, 2.0, 10.0] {
            p.set_nbar(ModeLabel::IP, nbar);
            let f = propagate_analytic(&p, p.gate_time)
                .unwrap()
                .bell_overlap(p.bell_phase);
            assert!((f - f0).abs() < 1e-6);
        }
    }

    #[test]
    fn quadrature_phase_matches_closed_form() {
        let p = ca_ca();
        let pieces = Ramp::None.pieces(p.gate_time * 0.77, p.gate_time);
        let quad = phase_by_quadrature(&pieces, p.detuning, p.gate_time * 0.77);
        let (_, closed) = loop_integrals(&p, p.gate_time * 0.77);
        assert!((quad / closed - 1.0).abs() < 1e-12);
        let alpha = I * envelope_transform(&pieces, p.detuning, p.gate_time * 0.77);
        let (a_closed, _) = loop_integrals(&p, p.gate_time * 0.77);
        assert!((alpha - a_closed).norm() < 1e-12 * a_closed.norm());
    }

    #[test]
    fn ramp_integrals_match_brute_force() {
        let mut p = ca_ca();
        p.ramp = Ramp::SineSquared {
            duration: 0.1 * p.gate_time,
        };
        let t = 0.93 * p.gate_time;
        let (alpha, phi) = loop_integrals(&p, t);
        // midpoint rule on a fine grid
        let n = 200_000;
        let h = t / n as f64;
        let (mut a, mut beta, mut ph) = (Complex64::from(0.0), Complex64::from(0.0), 0.0);
        for i in 0..n {
            let s = (i as f64 + 0.5) * h;
            let r = p.ramp.envelope(s, p.gate_time);
            let half = beta + Complex64::from_polar(r * h / 2.0, -p.detuning * s);
            ph += r * (Complex64::from_polar(1.0, p.detuning * s) * half).im * h;
            beta += Complex64::from_polar(r * h, -p.detuning * s);
            a += Complex64::from_polar(r * h, p.detuning * s);
        }
        assert!((I * a - alpha).norm() < 1e-8 * alpha.norm());
        assert!((ph / phi - 1.0).abs() < 1e-7);
    }

    #[test]
    fn compensated_ramp_still_makes_bell_state() {
        for k in [1, 3] {
            let c = coupling(&["40Ca+", "88Sr+"], "88Sr+", 770e3 / 1.137);
            let p = calibrate_gate(&c, ModeLabel::IP, 160e-6, k).unwrap();
            let q = with_compensated_ramp(&p, 0.05).unwrap();
            assert!(q.detuning > p.detuning);
            let s = propagate_analytic(&q, q.gate_time).unwrap();
            assert!(s.populations().p1bright < 1e-12);
            assert!((s.bell_overlap(q.bell_phase) - 1.0).abs() < 1e-10);
            // an uncompensated ramp leaves residual displacement
            let mut raw = p.clone();
            raw.ramp = q.ramp;
            assert!(
                propagate_analytic(&raw, raw.gate_time)
                    .unwrap()
                    .populations()
                    .p1bright
                    > 1e-6
            );
        }
    }

    #[test]
    fn undriven_ancilla_gate() {
        let c = coupling(&["88Sr+", "40Ca+", "88Sr+"], "88Sr+", 660e3);
        let p = calibrate_gate_on(&c, ModeLabel::IP, [0, 2], 61e-6, 1).unwrap();
        let s = propagate_analytic(&p, p.gate_time).unwrap();
        assert!(s.populations().p1bright < 1e-12);
        assert!((s.bell_overlap(p.bell_phase) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_time_and_zero_detuning() {
        let mut p = ca_ca();
        assert!(propagate_analytic(&p, -1e-6).is_err());
        p.detuning = 0.0;
        assert!(propagate_analytic(&p, 1e-6).is_err());
    }
}
