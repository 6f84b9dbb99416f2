//! Equilibrium of a harmonic-plus-Coulomb chain in dimensionless units.
//!
//! Positions are measured in the natural length `ℓ` and energies in `κ ℓ²`,
//! so `V(u) = Σ u_i²/2 + Σ_{i<j} 1/|u_i − u_j|`. The curvature is the same for
//! every ion, so the equilibrium does not depend on the masses.

use nalgebra::{DMatrix, DVector};

use super::CrystalConfig;
use crate::error::{Error, Result};

const GRADIENT_TOL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 200;

pub(crate) fn energy(u: &[f64]) -> f64 {
    let mut e: f64 = u.iter().map(|x| 0.5 * x * x).sum();
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            e += 1.0 / (u[j] - u[i]).abs();
        }
    }
    e
}

pub(crate) fn gradient(u: &[f64]) -> DVector<f64> {
    let n = u.len();
    DVector::from_fn(n, |i, _| {
        let mut g = u[i];
        for j in 0..n {
            if j != i {
                let d = u[i] - u[j];
                g -= d.signum() / (d * d);
            }
        }
        g
    })
}

/// `∂²V/∂u_i∂u_j` at `u`.
pub(crate) fn hessian(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = 1.0;
        for j in 0..n {
            if j != i {
                let c = 2.0 / (u[i] - u[j]).abs().powi(3);
                h[(i, i)] += c;
                h[(i, j)] = -c;
            }
        }
    }
    h
}

/// Equal-mass starting point: exact for up to three ions, uniform otherwise.
fn seed(n: usize) -> Vec<f64> {
    match n {
        1 => vec![0.0],
        2 => {
            let a = 0.25f64.cbrt();
            vec![-a, a]
        }
        3 => {
            let a = 1.25f64.cbrt();
            vec![-a, 0.0, a]
        }
        _ => {
            let spacing = 2.018 / (n as f64).powf(0.559);
            let mid = (n as f64 - 1.0) / 2.0;
            (0..n).map(|i| (i as f64 - mid) * spacing).collect()
        }
    }
}

fn ordered(u: &[f64]) -> bool {
    u.windows(2).all(|w| w[1] > w[0])
}

pub(crate) fn solve_dimensionless(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidCrystal("chain has no ions".into()));
    }
    let mut u = seed(n);
    let mut gnorm = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let g = gradient(&u);
        gnorm = g.norm();
        if gnorm < GRADIENT_TOL {
            return Ok(u);
        }
        let h = hessian(&u);
        let step = match h.cholesky() {
            Some(ch) => -ch.solve(&g),
            None => -g.clone(),
        };
        if gnorm < 1e-6 {
            // quadratic convergence region; energy differences are below rounding
            u.iter_mut().zip(step.iter()).for_each(|(x, d)| *x += d);
            continue;
        }
        let e0 = energy(&u);
        let slope = g.dot(&step);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(x, d)| x + t * d).collect();
            if ordered(&trial) && energy(&trial) <= e0 + 1e-4 * t * slope {
                u = trial;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::NoConvergence {
                    iterations: MAX_ITERATIONS,
                    gradient_norm: gnorm,
                });
            }
        }
    }
    let g = gradient(&u).norm();
    if g < GRADIENT_TOL {
        return Ok(u);
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        gradient_norm: gnorm.min(g),
    })
}

/// Axial equilibrium positions in meters, strictly increasing.
pub fn equilibrium_positions(config: &CrystalConfig) -> Result<Vec<f64>> {
    let ell = config.length_scale();
    Ok(solve_dimensionless(config.len())?
        .into_iter()
        .map(|x| x * ell)
        .collect())
}
