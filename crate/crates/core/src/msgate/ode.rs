//! Adaptive Schrödinger-equation integration on top of the Dormand-Prince
//! 5(4) stepper from `ode_solvers`.

use num_complex::Complex64;
use ode_solvers::{DVector, Dopri5, OutputType, System};

use crate::error::{Error, Result};

pub(crate) const RTOL: f64 = 1e-9;
pub(crate) const ATOL: f64 = 1e-12;
const MAX_STEPS: u32 = 50_000_000;

/// `out = H(t) ψ` with `ħ = 1`.
pub(crate) trait Generator {
    fn apply(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]);
}

fn unpack(y: &DVector<f64>) -> Vec<Complex64> {
    y.as_slice()
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect()
}

fn pack(psi: &[Complex64]) -> DVector<f64> {
    DVector::from_iterator(psi.len() * 2, psi.iter().flat_map(|z| [z.re, z.im]))
}

struct Rhs<'a, H: Generator> {
    h: &'a H,
    /// Called after every accepted step; returning `true` stops integration.
    monitor: &'a mut dyn FnMut(f64, &[Complex64]) -> bool,
    stopped: bool,
}

impl<H: Generator> System<f64, DVector<f64>> for Rhs<'_, H> {
    fn system(&self, t: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        let psi = unpack(y);
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        self.h.apply(t, &psi, &mut out);
        // dψ/dt = −i H ψ
        for (k, z) in out.iter().enumerate() {
            dy[2 * k] = z.im;
            dy[2 * k + 1] = -z.re;
        }
    }

    fn solout(&mut self, t: f64, y: &DVector<f64>, _dy: &DVector<f64>) -> bool {
        if (self.monitor)(t, &unpack(y)) {
            self.stopped = true;
        }
        self.stopped
    }
}

/// Outcome of [`evolve`]: states at each requested time, or the time at
/// which the monitor stopped the run.
pub(crate) enum Evolution {
    Completed(Vec<Vec<Complex64>>),
    Stopped(f64),
}

/// Integrates from `t = 0` and returns the state at each of the sorted
/// `times`.
pub(crate) fn evolve<H: Generator>(
    h: &H,
    psi0: &[Complex64],
    times: &[f64],
    monitor: &mut dyn FnMut(f64, &[Complex64]) -> bool,
) -> Result<Evolution> {
    let mut out = Vec::with_capacity(times.len());
    let mut t_now = 0.0;
    let mut y = pack(psi0);
    for &t_next in times {
        // grid points a few ulp apart count as the same time
        if t_next - t_now > 1e-12 * t_next {
            let rhs = Rhs {
                h,
                monitor: &mut *monitor,
                stopped: false,
            };
            let mut stepper = Dopri5::from_param(
                rhs,
                t_now,
                t_next,
                t_next - t_now,
                y.clone(),
                RTOL,
                ATOL,
                0.9,
                0.04,
                0.2,
                10.0,
                t_next - t_now,
                0.0,
                MAX_STEPS,
                u32::MAX,
                OutputType::Sparse,
            );
            stepper
                .integrate()
                .map_err(|e| Error::Integrator(e.to_string()))?;
            let (ts, ys) = stepper.results().get();
            let (t_last, y_last) = match (ts.last(), ys.last()) {
                (Some(t), Some(y)) => (*t, y.clone()),
                _ => return Err(Error::Integrator("integrator produced no output".into())),
            };
            if t_last < t_next * (1.0 - 1e-12) {
                return Ok(Evolution::Stopped(t_last));
            }
            y = y_last;
            t_now = t_next;
        }
        out.push(unpack(&y));
    }
    Ok(Evolution::Completed(out))
}
