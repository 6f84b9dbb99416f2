//! Parity-fringe analysis and the Bell-state fidelity estimate.

use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4};
use num_complex::Complex64;
use serde::Serialize;

use super::state::{equatorial_pauli, kron2, TwoQubitState, I};
use crate::error::{Error, Result};

/// Fits with a larger offset than this are flagged as model violations.
pub const OFFSET_WARNING: f64 = 0.05;
const MIN_POINTS: usize = 8;

/// π/2 rotation about the equatorial axis at angle `chi`, on both qubits.
pub fn analysis_rotation(chi: f64) -> Matrix4<Complex64> {
    let r: Matrix2<Complex64> = Matrix2::identity() * Complex64::from(FRAC_PI_4.cos())
        - equatorial_pauli(chi) * (I * FRAC_PI_4.sin());
    kron2(&r, &r)
}

/// `(P00 + P11) − (P01 + P10)` after the analysis rotation, for each `χ`.
pub fn parity_scan(state: &TwoQubitState, chi_grid: &[f64]) -> Vec<(f64, f64)> {
    chi_grid
        .iter()
        .map(|&chi| {
            let s = state.transformed(&analysis_rotation(chi));
            let parity = s.population(0) + s.population(3) - s.population(1) - s.population(2);
            (chi, parity.clamp(-1.0, 1.0))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParityFit {
    /// `C_PF = |A|`
    pub contrast: f64,
    pub phase: f64,
    pub offset: f64,
}

fn check_fringe(fringe: &[(f64, f64)], period: f64) -> Result<()> {
    let lo = fringe.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = fringe.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let span = if fringe.is_empty() { 0.0 } else { hi - lo };
    if fringe.len() < MIN_POINTS || span < period * (1.0 - 1e-12) {
        return Err(Error::InsufficientFringe {
            points: fringe.len(),
            span,
        });
    }
    if fringe.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
        return Err(Error::InvalidArgument(
            "fringe contains non-finite values".into(),
        ));
    }
    Ok(())
}

/// Least-squares `a sin(ωχ) + b cos(ωχ) + c`; returns the coefficients and
/// the residual sum of squares.
fn linear_fit(fringe: &[(f64, f64)], omega: f64) -> Result<([f64; 3], f64)> {
    let design = DMatrix::from_fn(fringe.len(), 3, |r, c| match c {
        0 => (omega * fringe[r].0).sin(),
        1 => (omega * fringe[r].0).cos(),
        _ => 1.0,
    });
    let y = DVector::from_iterator(fringe.len(), fringe.iter().map(|p| p.1));
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= smax * 1e-10 {
        return Err(Error::SingularFit);
    }
    let x = svd
        .solve(&y, smax * 1e-12)
        .map_err(|_| Error::SingularFit)?;
    let residual = (design * &x - y).norm_squared();
    Ok(([x[0], x[1], x[2]], residual))
}

/// `A sin(2χ + φ₀) + c` with the period fixed at π.
pub fn fit_parity_contrast(fringe: &[(f64, f64)]) -> Result<ParityFit> {
    check_fringe(fringe, PI)?;
    let ([a, b, c], _) = linear_fit(fringe, 2.0)?;
    if c.abs() > OFFSET_WARNING {
        log::warn!("parity fit offset {c:.3} exceeds {OFFSET_WARNING}");
    }
    Ok(ParityFit {
        contrast: a.hypot(b),
        phase: b.atan2(a),
        offset: c,
    })
}

/// Period of the best-fitting free-frequency sinusoid, searched within a
/// factor of two of π.
pub fn fit_parity_period(fringe: &[(f64, f64)]) -> Result<f64> {
    check_fringe(fringe, PI)?;
    let cost = |w: f64| linear_fit(fringe, w).map(|r| r.1);
    // coarse scan to land in the right basin, then golden section
    let grid: Vec<f64> = (0..=200).map(|i| 1.0 + 3.0 * i as f64 / 200.0).collect();
    let mut best = (grid[0], f64::INFINITY);
    for &w in &grid {
        let r = cost(w)?;
        if r < best.1 {
            best = (w, r);
        }
    }
    let step = 3.0 / 200.0;
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (cost(x1)?, cost(x2)?);
    while b - a > 1e-13 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = cost(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = cost(x2)?;
        }
    }
    Ok(2.0 * PI / (0.5 * (a + b)))
}

/// `F = (P00 + P11 + C_PF)/2`.
pub fn bell_fidelity(p00: f64, p11: f64, contrast: f64) -> Result<f64> {
    for (name, v) in [("P00", p00), ("P11", p11), ("contrast", contrast)] {
        if !(-1e-9..=1.0 + 1e-9).contains(&v) {
            return Err(Error::Unphysical(format!(
                "{name} = {v} lies outside [0, 1]"
            )));
        }
    }
    let bound = 2.0 * (p00.max(0.0) * p11.max(0.0)).sqrt();
    if contrast > bound + 1e-9 {
        return Err(Error::Unphysical(format!(
            "contrast {contrast} exceeds 2√(P00 P11) = {bound}"
        )));
    }
    let f = (p00 + p11 + contrast) / 2.0;
    let clamped = f.clamp(0.0, 1.0);
    if (clamped - f).abs() > 1e-9 {
        log::warn!("fidelity {f} clamped to {clamped}");
    }
    Ok(clamped)
}
