//! Fock-truncated numerical propagation of the gate.
//!
//! The joint state lives in `spin ⊗ mode₁ ⊗ … ⊗ mode_k`, spin index outermost
//! and the last mode fastest. A thermal initial state is handled as a
//! weighted ensemble of Fock-state trajectories.
//!
//! The full interaction `Ω 2cos(νt) e^{iψ} D(t) σ+ + h.c.` with
//! `D(t) = exp(iη(a e^{−iωt} + a† e^{iωt}))` reduces, after the rotating-wave
//! and Lamb-Dicke approximations, to the complex conjugate of the Lamb-Dicke
//! Hamiltonian used by the analytic propagator when `ψ = θ + π/2`. Full-model
//! states are therefore compared against conjugated Lamb-Dicke states.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, Matrix4, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use super::analytic::spin_operator;
use super::ode::{evolve, Evolution, Generator};
use super::state::TwoQubitState;
use super::{thermal_weights, GateParams, Ramp, THERMAL_WEIGHT_TARGET};
use crate::crystal::ModeLabel;
use crate::error::{Error, Result};

/// Weighted top-two-level population that aborts a run.
pub const LEAKAGE_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Hamiltonian {
    /// Bichromatic drive with the exact motional exponential.
    Full,
    /// Rotating-wave, first-order Lamb-Dicke form.
    LambDicke,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum InitialMotion {
    Ground,
    Thermal(f64),
    Fock(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MotionalMode {
    pub label: ModeLabel,
    /// Fock dimension.
    pub n_max: usize,
    pub initial: InitialMotion,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MotionalSpec {
    pub modes: Vec<MotionalMode>,
}

impl MotionalSpec {
    pub fn single(label: ModeLabel, n_max: usize, initial: InitialMotion) -> Self {
        MotionalSpec {
            modes: vec![MotionalMode {
                label,
                n_max,
                initial,
            }],
        }
    }

    /// Thermal states with the occupations recorded in `params`.
    pub fn from_params(params: &GateParams, truncation: &[(ModeLabel, usize)]) -> Self {
        MotionalSpec {
            modes: truncation
                .iter()
                .map(|&(label, n_max)| {
                    let nbar = params.nbar(label);
                    MotionalMode {
                        label,
                        n_max,
                        initial: if nbar > 0.0 {
                            InitialMotion::Thermal(nbar)
                        } else {
                            InitialMotion::Ground
                        },
                    }
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::InvalidTruncation("no motional modes".into()));
        }
        for (i, m) in self.modes.iter().enumerate() {
            if self.modes[..i].iter().any(|o| o.label == m.label) {
                return Err(Error::InvalidTruncation(format!(
                    "mode {} listed twice",
                    m.label
                )));
            }
            let (nbar, tail) = match m.initial {
                InitialMotion::Ground => (0.0, 0.0),
                InitialMotion::Thermal(n) if n >= 0.0 && n.is_finite() => {
                    // weight on levels n_max − 2 and above
                    (n, (n / (n + 1.0)).powi(m.n_max.saturating_sub(2) as i32))
                }
                InitialMotion::Thermal(n) => {
                    return Err(Error::InvalidTruncation(format!(
                        "mean occupation {n} of {} is invalid",
                        m.label
                    )))
                }
                InitialMotion::Fock(k) => {
                    if k + 2 >= m.n_max {
                        return Err(Error::InvalidTruncation(format!(
                            "Fock state {k} of {} needs n_max above {}",
                            m.label,
                            k + 2
                        )));
                    }
                    (k as f64, 0.0)
                }
            };
            let floor = (4.0 * (nbar + 1.0)).ceil() as usize;
            if m.n_max < floor.max(3) {
                return Err(Error::InvalidTruncation(format!(
                    "n_max {} for mode {} is below 4(n̄+1) = {floor}",
                    m.n_max, m.label
                )));
            }
            if tail >= 1e-8 {
                log::warn!(
                    "thermal weight {tail:.2e} of mode {} starts in its top two levels (n_max {})",
                    m.label,
                    m.n_max
                );
            }
        }
        Ok(())
    }

    fn dims(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.n_max).collect()
    }

    /// Initial Fock configurations with their normalized weights, heaviest
    /// first.
    fn ensemble(&self) -> Vec<(f64, Vec<usize>)> {
        let per_mode: Vec<Vec<(usize, f64)>> = self
            .modes
            .iter()
            .map(|m| match m.initial {
                InitialMotion::Ground => vec![(0, 1.0)],
                InitialMotion::Fock(k) => vec![(k, 1.0)],
                InitialMotion::Thermal(n) => thermal_weights(n, m.n_max)
                    .into_iter()
                    .enumerate()
                    .collect(),
            })
            .collect();
        let mut combos: Vec<(f64, Vec<usize>)> = vec![(1.0, Vec::new())];
        for levels in &per_mode {
            combos = combos
                .iter()
                .flat_map(|(w, idx)| {
                    levels.iter().map(move |&(n, p)| {
                        let mut next = idx.clone();
                        next.push(n);
                        (w * p, next)
                    })
                })
                .collect();
        }
        combos.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        let total: f64 = combos.iter().map(|c| c.0).sum();
        let mut kept = Vec::new();
        let mut acc = 0.0;
        for c in combos {
            if acc >= THERMAL_WEIGHT_TARGET * total {
                break;
            }
            acc += c.0;
            kept.push(c);
        }
        kept.iter_mut().for_each(|c| c.0 /= acc);
        kept
    }
}

/// Row-sparse form of a motional operator. Entries below `1e-15` in
/// magnitude, the accuracy of the eigendecomposition that produced them, are
/// dropped.
struct Banded {
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl Banded {
    fn from_dense(a: &DMatrix<Complex64>) -> Self {
        Banded {
            rows: (0..a.nrows())
                .map(|r| {
                    (0..a.ncols())
                        .filter(|&c| a[(r, c)].norm() > 1e-15)
                        .map(|c| (c, a[(r, c)]))
                        .collect()
                })
                .collect(),
        }
    }
}

/// `y = diag(u) A diag(u)* x` along `axis` of a row-major tensor with shape
/// `dims`, with `A` or its elementwise conjugate. `x` is overwritten.
fn apply_axis(
    a: &Banded,
    conjugate: bool,
    u: &[Complex64],
    x: &mut [Complex64],
    y: &mut [Complex64],
    dims: &[usize],
    axis: usize,
) {
    let n = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    for (k, z) in x.iter_mut().enumerate() {
        *z *= u[k / inner % n].conj();
    }
    let outer: usize = dims[..axis].iter().product();
    for o in 0..outer {
        let base = o * n * inner;
        for i in 0..inner {
            for (r, row) in a.rows.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                if conjugate {
                    for &(c, coeff) in row {
                        acc += coeff.conj() * x[base + c * inner + i];
                    }
                } else {
                    for &(c, coeff) in row {
                        acc += coeff * x[base + c * inner + i];
                    }
                }
                y[base + r * inner + i] = acc * u[r];
            }
        }
    }
}

/// `exp(iη(a + a†))` in an `n`-level truncation.
fn displacement_generator(eta: f64, n: usize) -> DMatrix<Complex64> {
    let x = DMatrix::from_fn(n, n, |r, c| {
        if r + 1 == c || c + 1 == r {
            (r.max(c) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(x);
    let v = eig.eigenvectors.map(Complex64::from);
    let phases =
        DMatrix::from_diagonal(&eig.eigenvalues.map(|x| Complex64::from_polar(1.0, eta * x)));
    &v * phases * v.transpose()
}

struct FullDrive {
    /// Spin index offset of this qubit (2 for the first, 1 for the second).
    bit: usize,
    rabi: f64,
    phase: Complex64,
    /// `exp(iη(a + a†))` per simulated mode. The matrix is symmetric, so its
    /// adjoint is the elementwise conjugate.
    kernels: Vec<Banded>,
}

struct FullModel {
    dims: Vec<usize>,
    frequencies: Vec<f64>,
    drive_frequency: f64,
    drives: Vec<FullDrive>,
    ramp: Ramp,
    pulse: f64,
}

impl FullModel {
    /// `D(t) x` or `D(t)† x`, where `D(t) = U M U†` with `U = e^{iωt a†a}`.
    fn apply_frame(
        &self,
        drive: &FullDrive,
        phases: &[Vec<Complex64>],
        adjoint: bool,
        x: &[Complex64],
        out: &mut [Complex64],
        scratch: &mut [Complex64],
    ) {
        out.copy_from_slice(x);
        for (axis, kernel) in drive.kernels.iter().enumerate() {
            scratch.copy_from_slice(out);
            apply_axis(
                kernel,
                adjoint,
                &phases[axis],
                scratch,
                out,
                &self.dims,
                axis,
            );
        }
    }
}

impl Generator for FullModel {
    fn apply(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        let envelope = self.ramp.envelope(t, self.pulse) * 2.0 * (self.drive_frequency * t).cos();
        if envelope == 0.0 {
            return;
        }
        let phases: Vec<Vec<Complex64>> = self
            .dims
            .iter()
            .zip(&self.frequencies)
            .map(|(&n, &w)| {
                (0..n)
                    .map(|k| Complex64::from_polar(1.0, w * t * k as f64))
                    .collect()
            })
            .collect();
        let m: usize = self.dims.iter().product();
        let mut tmp = vec![Complex64::new(0.0, 0.0); m];
        let mut scratch = vec![Complex64::new(0.0, 0.0); m];
        for d in &self.drives {
            let coeff = d.rabi * envelope;
            if coeff == 0.0 {
                continue;
            }
            for s in 0..4 {
                let src = &psi[s * m..(s + 1) * m];
                let (target, adjoint, phase) = if s & d.bit != 0 {
                    (s - d.bit, false, d.phase)
                } else {
                    (s + d.bit, true, d.phase.conj())
                };
                self.apply_frame(d, &phases, adjoint, src, &mut tmp, &mut scratch);
                let f = phase * coeff;
                for (o, v) in out[target * m..(target + 1) * m].iter_mut().zip(&tmp) {
                    *o += f * v;
                }
            }
        }
    }
}

struct LambDickeModel {
    n: usize,
    spin: Matrix4<Complex64>,
    detuning: f64,
    ramp: Ramp,
    pulse: f64,
}

impl Generator for LambDickeModel {
    fn apply(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        let r = self.ramp.envelope(t, self.pulse);
        let lower = Complex64::from_polar(1.0, -self.detuning * t);
        let raise = lower.conj();
        let mut x = vec![Complex64::new(0.0, 0.0); 4 * n];
        for s in 0..4 {
            for k in 0..n {
                let mut v = Complex64::new(0.0, 0.0);
                if k + 1 < n {
                    v += lower * ((k + 1) as f64).sqrt() * psi[s * n + k + 1];
                }
                if k > 0 {
                    v += raise * (k as f64).sqrt() * psi[s * n + k - 1];
                }
                x[s * n + k] = v;
            }
        }
        for s in 0..4 {
            for k in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for q in 0..4 {
                    acc += self.spin[(s, q)] * x[q * n + k];
                }
                out[s * n + k] = -acc * r;
            }
        }
    }
}

/// Largest marginal population in the top two levels of any mode.
fn top_two_population(psi: &[Complex64], dims: &[usize]) -> f64 {
    let m: usize = dims.iter().product();
    let mut worst: f64 = 0.0;
    for (axis, &n) in dims.iter().enumerate() {
        let inner: usize = dims[axis + 1..].iter().product();
        let mut p = 0.0;
        for (idx, z) in psi.iter().enumerate() {
            let level = (idx % m) / inner % n;
            if level + 2 >= n {
                p += z.norm_sqr();
            }
        }
        worst = worst.max(p);
    }
    worst
}

fn suggest(motion: &MotionalSpec) -> usize {
    motion
        .modes
        .iter()
        .map(|m| m.n_max + (m.n_max / 4).max(8))
        .max()
        .unwrap_or(8)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidArgument(
            "times must be finite and non-negative".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(
            "times must be sorted ascending".into(),
        ));
    }
    Ok(())
}

/// Runs one initial Fock state, calling the observer at every grid time.
type Evolver<'a> =
    dyn Fn(&[Complex64], &mut dyn FnMut(f64, &[Complex64]) -> bool) -> Result<Evolution> + 'a;

/// Reduced two-qubit states at each of the ascending `times`.
pub fn propagate_oracle_grid(
    params: &GateParams,
    motion: &MotionalSpec,
    hamiltonian: Hamiltonian,
    times: &[f64],
) -> Result<Vec<TwoQubitState>> {
    params.validate()?;
    motion.validate()?;
    check_times(times)?;
    let dims = motion.dims();
    let m: usize = dims.iter().product();
    let generator: Box<Evolver> = match hamiltonian {
        Hamiltonian::LambDicke => {
            if motion.modes.len() != 1 || motion.modes[0].label != params.mode {
                return Err(Error::InvalidArgument(
                    "the Lamb-Dicke model simulates the gate mode only".into(),
                ));
            }
            let model = LambDickeModel {
                n: dims[0],
                spin: spin_operator(params)?,
                detuning: params.detuning,
                ramp: params.ramp,
                pulse: params.gate_time,
            };
            Box::new(move |psi0, monitor| evolve(&model, psi0, times, monitor))
        }
        Hamiltonian::Full => {
            if !motion.modes.iter().any(|x| x.label == params.mode) {
                return Err(Error::InvalidArgument(format!(
                    "gate mode {} must be simulated",
                    params.mode
                )));
            }
            let frequencies = motion
                .modes
                .iter()
                .map(|x| params.mode_frequency(x.label))
                .collect::<Result<Vec<_>>>()?;
            let drives = params
                .drives
                .iter()
                .enumerate()
                .map(|(j, d)| {
                    Ok(FullDrive {
                        bit: if j == 0 { 2 } else { 1 },
                        rabi: d.carrier_rabi,
                        phase: Complex64::from_polar(1.0, params.drive_axis(j) + FRAC_PI_2),
                        kernels: motion
                            .modes
                            .iter()
                            .map(|x| {
                                Ok(Banded::from_dense(&displacement_generator(
                                    d.eta(x.label)?,
                                    x.n_max,
                                )))
                            })
                            .collect::<Result<Vec<_>>>()?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let model = FullModel {
                dims: dims.clone(),
                frequencies,
                drive_frequency: params.mode_frequency(params.mode)? + params.detuning,
                drives,
                ramp: params.ramp,
                pulse: params.gate_time,
            };
            Box::new(move |psi0, monitor| evolve(&model, psi0, times, monitor))
        }
    };

    let mut rho = vec![Matrix4::<Complex64>::zeros(); times.len()];
    let mut leaked = 0.0;
    for (weight, levels) in motion.ensemble() {
        let mut index = 0;
        for (&n, &dim) in levels.iter().zip(&dims) {
            index = index * dim + n;
        }
        let mut psi0 = vec![Complex64::new(0.0, 0.0); 4 * m];
        psi0[3 * m + index] = Complex64::new(1.0, 0.0);
        let mut worst: f64 = 0.0;
        let mut monitor = |_t: f64, psi: &[Complex64]| {
            worst = worst.max(top_two_population(psi, &dims));
            leaked + weight * worst > LEAKAGE_LIMIT
        };
        let states = match generator(&psi0, &mut monitor)? {
            Evolution::Completed(states) => states,
            Evolution::Stopped(time) => {
                return Err(Error::Leakage {
                    population: leaked + weight * worst,
                    time,
                    suggested_n_max: suggest(motion),
                })
            }
        };
        leaked += weight * worst;
        for (r, psi) in rho.iter_mut().zip(&states) {
            for s in 0..4 {
                for q in 0..4 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..m {
                        acc += psi[s * m + k] * psi[q * m + k].conj();
                    }
                    r[(s, q)] += acc * weight;
                }
            }
        }
    }
    Ok(rho.into_iter().map(|rho| TwoQubitState { rho }).collect())
}

/// Reduced two-qubit state at a single time.
pub fn propagate_oracle(
    params: &GateParams,
    motion: &MotionalSpec,
    hamiltonian: Hamiltonian,
    t: f64,
) -> Result<TwoQubitState> {
    propagate_oracle_grid(params, motion, hamiltonian, &[t])?
        .pop()
        .ok_or_else(|| Error::Integrator("no state returned".into()))
}
