//! Mølmer-Sørensen gate dynamics.
//!
//! Two propagators are provided. [`propagate_analytic`] uses the exact
//! factorization of the Lamb-Dicke, rotating-wave propagator into a
//! spin-conditioned displacement and a geometric phase. [`propagate_oracle`]
//! integrates the Schrödinger equation in a truncated Fock space, either for
//! the same Lamb-Dicke Hamiltonian or for the full bichromatic interaction.
//!
//! The spin basis, detection model and parity analysis live in [`state`] and
//! [`fringe`].

mod analytic;
pub mod fringe;
mod ode;
mod oracle;
pub mod state;

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use serde::Serialize;

use crate::coupling::CouplingTable;
use crate::crystal::ModeLabel;
use crate::error::{Error, Result};

pub use analytic::{loop_integrals, propagate_analytic, propagate_analytic_fock};
pub use fringe::{bell_fidelity, fit_parity_contrast, fit_parity_period, parity_scan, ParityFit};
pub use oracle::{
    propagate_oracle, propagate_oracle_grid, Hamiltonian, InitialMotion, MotionalMode, MotionalSpec,
};
pub use state::{Populations, TwoQubitState};

/// Below this `|η|` an ion counts as not participating in a mode.
pub const DECOUPLED_ETA: f64 = 1e-12;

/// Cumulative thermal weight kept when summing over Fock states.
pub const THERMAL_WEIGHT_TARGET: f64 = 1.0 - 1e-10;

/// Amplitude envelope applied to the drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Ramp {
    None,
    /// `sin²` rise over `duration` at the start and matching fall at the end
    /// of the pulse.
    SineSquared {
        duration: f64,
    },
}

impl Ramp {
    /// Envelope value at `t` for a pulse of length `pulse`. Without a ramp the
    /// drive stays on indefinitely.
    pub fn envelope(&self, t: f64, pulse: f64) -> f64 {
        match *self {
            Ramp::None => 1.0,
            Ramp::SineSquared { duration } => {
                if t < 0.0 || t > pulse {
                    0.0
                } else if t < duration {
                    (PI * t / (2.0 * duration)).sin().powi(2)
                } else if t > pulse - duration {
                    (PI * (pulse - t) / (2.0 * duration)).sin().powi(2)
                } else {
                    1.0
                }
            }
        }
    }

    /// Envelope as pieces `c0 + c1 cos(k t + p)` on `[start, end]`, covering
    /// `[0, t]`.
    pub(crate) fn pieces(&self, t: f64, pulse: f64) -> Vec<EnvelopePiece> {
        match *self {
            Ramp::None => vec![EnvelopePiece::flat(0.0, t)],
            Ramp::SineSquared { duration } => {
                let k = PI / duration;
                let raw = [
                    EnvelopePiece {
                        start: 0.0,
                        end: duration,
                        c0: 0.5,
                        c1: -0.5,
                        k,
                        p: 0.0,
                    },
                    EnvelopePiece {
                        start: duration,
                        end: pulse - duration,
                        c0: 1.0,
                        c1: 0.0,
                        k: 0.0,
                        p: 0.0,
                    },
                    EnvelopePiece {
                        start: pulse - duration,
                        end: pulse,
                        c0: 0.5,
                        c1: -0.5,
                        k,
                        p: -k * pulse,
                    },
                ];
                raw.into_iter()
                    .filter_map(|mut piece| {
                        piece.end = piece.end.min(t);
                        (piece.end > piece.start).then_some(piece)
                    })
                    .collect()
            }
        }
    }

    fn validate(&self, pulse: f64) -> Result<()> {
        if let Ramp::SineSquared { duration } = *self {
            if !(duration > 0.0 && 2.0 * duration <= pulse) {
                return Err(Error::InvalidGate(format!(
                    "ramp duration {duration:e} s must be positive and at most half the pulse {pulse:e} s"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct EnvelopePiece {
    pub start: f64,
    pub end: f64,
    pub c0: f64,
    pub c1: f64,
    pub k: f64,
    pub p: f64,
}

impl EnvelopePiece {
    fn flat(start: f64, end: f64) -> Self {
        EnvelopePiece {
            start,
            end,
            c0: 1.0,
            c1: 0.0,
            k: 0.0,
            p: 0.0,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.c0 + self.c1 * (self.k * t + self.p).cos()
    }
}

/// One driven qubit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Drive {
    pub ion: usize,
    pub species: String,
    /// Carrier Rabi frequency Ω, rad/s.
    pub carrier_rabi: f64,
    /// Signed Lamb-Dicke parameter of this ion on every mode.
    pub signed_eta: Vec<(ModeLabel, f64)>,
    /// Extra drive phase. Calibration sets π where the gate-mode η is
    /// negative so both ions feel the force with the same sign.
    pub phase_offset: f64,
}

impl Drive {
    pub fn eta(&self, mode: ModeLabel) -> Result<f64> {
        self.signed_eta
            .iter()
            .find(|(l, _)| *l == mode)
            .map(|(_, e)| *e)
            .ok_or(Error::UnknownMode(mode))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateParams {
    pub mode: ModeLabel,
    /// All mode frequencies of the crystal, rad/s.
    pub mode_frequencies: Vec<(ModeLabel, f64)>,
    /// δ, rad/s.
    pub detuning: f64,
    pub loops: u32,
    /// Pulse length, s.
    pub gate_time: f64,
    pub ramp: Ramp,
    /// Mean occupation per mode; modes not listed start in the ground state.
    pub thermal: Vec<(ModeLabel, f64)>,
    /// φ of the target `(|00⟩ + e^{iφ}|11⟩)/√2`.
    pub bell_phase: f64,
    pub drives: [Drive; 2],
}

impl GateParams {
    pub fn mode_frequency(&self, mode: ModeLabel) -> Result<f64> {
        self.mode_frequencies
            .iter()
            .find(|(l, _)| *l == mode)
            .map(|(_, w)| *w)
            .ok_or(Error::UnknownMode(mode))
    }

    pub fn nbar(&self, mode: ModeLabel) -> f64 {
        self.thermal
            .iter()
            .find(|(l, _)| *l == mode)
            .map_or(0.0, |(_, n)| *n)
    }

    pub fn set_nbar(&mut self, mode: ModeLabel, nbar: f64) {
        self.thermal.retain(|(l, _)| *l != mode);
        self.thermal.push((mode, nbar));
    }

    /// Signed `η_j Ω_j` on the gate mode.
    pub fn sideband_product(&self, drive: usize) -> Result<f64> {
        let d = &self.drives[drive];
        Ok(d.eta(self.mode)? * d.carrier_rabi)
    }

    /// Common spin axis θ of the force, from the Bell phase.
    pub fn spin_axis(&self) -> f64 {
        self.bell_phase / 2.0 + FRAC_PI_4
    }

    /// Spin axis seen by each driven ion.
    pub fn drive_axis(&self, drive: usize) -> f64 {
        self.spin_axis() + self.drives[drive].phase_offset
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.detuning.is_finite() && self.detuning > 0.0) {
            return Err(Error::InvalidGate(format!(
                "detuning must be positive, got {}",
                self.detuning
            )));
        }
        if self.loops == 0 {
            return Err(Error::InvalidGate("loop count must be at least 1".into()));
        }
        if !(self.gate_time.is_finite() && self.gate_time > 0.0) {
            return Err(Error::InvalidGate("gate time must be positive".into()));
        }
        if self.drives[0].ion == self.drives[1].ion {
            return Err(Error::InvalidGate(
                "the two driven qubits must be different ions".into(),
            ));
        }
        for d in &self.drives {
            if !(d.carrier_rabi >= 0.0 && d.carrier_rabi.is_finite()) {
                return Err(Error::InvalidGate(
                    "carrier Rabi frequencies must be non-negative".into(),
                ));
            }
        }
        if let Some((l, n)) = self
            .thermal
            .iter()
            .find(|(_, n)| !(*n >= 0.0 && n.is_finite()))
        {
            return Err(Error::InvalidGate(format!(
                "mean occupation of {l} must be non-negative, got {n}"
            )));
        }
        self.mode_frequency(self.mode)?;
        self.ramp.validate(self.gate_time)
    }
}

/// Calibrated gate driving the first and last ion of the chain. Every ion in
/// the chain must couple to `mode`.
pub fn calibrate_gate(
    coupling: &CouplingTable,
    mode: ModeLabel,
    gate_time: f64,
    loops: u32,
) -> Result<GateParams> {
    for entry in coupling.mode_entries(mode)? {
        if entry.eta <= DECOUPLED_ETA {
            return Err(Error::DecoupledIon {
                ion: entry.ion,
                species: entry.species.clone(),
                mode,
            });
        }
    }
    let n = coupling.ions.len();
    if n < 2 {
        return Err(Error::InvalidGate(
            "a two-qubit gate needs at least two ions".into(),
        ));
    }
    calibrate_gate_on(coupling, mode, [0, n - 1], gate_time, loops)
}

/// Calibrated gate on an explicit pair of qubits; other ions stay undriven.
///
/// Sets `δ = 2πK/t_g` and `Ω_j = δ / (4√K |η_j|)`.
pub fn calibrate_gate_on(
    coupling: &CouplingTable,
    mode: ModeLabel,
    qubits: [usize; 2],
    gate_time: f64,
    loops: u32,
) -> Result<GateParams> {
    if !(gate_time.is_finite() && gate_time > 0.0) {
        return Err(Error::InvalidGate(format!(
            "gate time must be positive, got {gate_time}"
        )));
    }
    if loops == 0 {
        return Err(Error::InvalidGate("loop count must be at least 1".into()));
    }
    if qubits[0] == qubits[1] || qubits.iter().any(|&q| q >= coupling.ions.len()) {
        return Err(Error::InvalidGate(format!("invalid qubit pair {qubits:?}")));
    }
    let detuning = TAU * f64::from(loops) / gate_time;
    let product = detuning / (4.0 * f64::from(loops).sqrt());
    let drive = |ion: usize| -> Result<Drive> {
        let entry = coupling.entry(ion, mode)?;
        if entry.eta <= DECOUPLED_ETA {
            return Err(Error::DecoupledIon {
                ion,
                species: entry.species.clone(),
                mode,
            });
        }
        let signed_eta = coupling
            .modes
            .iter()
            .map(|(l, _)| Ok((*l, coupling.entry(ion, *l)?.signed_eta)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Drive {
            ion,
            species: entry.species.clone(),
            carrier_rabi: product / entry.eta,
            signed_eta,
            phase_offset: if entry.signed_eta < 0.0 { PI } else { 0.0 },
        })
    };
    Ok(GateParams {
        mode,
        mode_frequencies: coupling.modes.clone(),
        detuning,
        loops,
        gate_time,
        ramp: Ramp::None,
        thermal: Vec::new(),
        bell_phase: PI / 2.0,
        drives: [drive(qubits[0])?, drive(qubits[1])?],
    })
}

/// Adds a `sin²` ramp of `fraction × t_g` and re-solves the detuning and
/// drive strength so the loop still closes with the same entangling phase
/// at the unchanged pulse length.
pub fn with_compensated_ramp(params: &GateParams, fraction: f64) -> Result<GateParams> {
    if fraction == 0.0 {
        let mut p = params.clone();
        p.ramp = Ramp::None;
        return Ok(p);
    }
    if !(fraction > 0.0 && fraction <= 0.5) {
        return Err(Error::InvalidGate(format!(
            "ramp fraction {fraction} outside (0, 0.5]"
        )));
    }
    let mut p = params.clone();
    p.ramp = Ramp::SineSquared {
        duration: fraction * params.gate_time,
    };
    p.validate()?;
    let t = p.gate_time;
    let k = f64::from(p.loops);
    // symmetric envelope: the end-point displacement is real up to e^{iδT/2}
    let residual = |delta: f64| {
        let mut q = p.clone();
        q.detuning = delta;
        let (alpha, _) = loop_integrals(&q, t);
        (alpha * num_complex::Complex64::from_polar(1.0, -delta * t / 2.0)).im
    };
    let (mut lo, mut hi) = (TAU * k / t, TAU * (k + 0.5) / t);
    let (mut f_lo, f_hi) = (residual(lo), residual(hi));
    if f_lo * f_hi > 0.0 {
        return Err(Error::InvalidGate(
            "no loop-closing detuning found for this ramp".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = residual(mid);
        if f_mid * f_lo <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    p.detuning = 0.5 * (lo + hi);
    let (_, phi) = loop_integrals(&p, t);
    let g0 = p.sideband_product(0)?.abs();
    let g1 = p.sideband_product(1)?.abs();
    let scale = (PI / (8.0 * phi * g0 * g1)).sqrt();
    for d in &mut p.drives {
        d.carrier_rabi *= scale;
    }
    Ok(p)
}

/// Geometric weights `n̄ⁿ/(n̄+1)ⁿ⁺¹` up to cumulative [`THERMAL_WEIGHT_TARGET`]
/// or `limit` levels, whichever comes first.
pub fn thermal_weights(nbar: f64, limit: usize) -> Vec<f64> {
    let mut w = Vec::new();
    let mut p = 1.0 / (nbar + 1.0);
    let ratio = nbar / (nbar + 1.0);
    let mut total = 0.0;
    while w.len() < limit.max(1) {
        w.push(p);
        total += p;
        if total >= THERMAL_WEIGHT_TARGET || ratio == 0.0 {
            break;
        }
        p *= ratio;
    }
    w
}

/// Which propagator produces a time series.
#[derive(Debug, Clone, PartialEq)]
pub enum Propagator {
    Analytic,
    Oracle {
        motion: MotionalSpec,
        hamiltonian: Hamiltonian,
    },
}

impl Propagator {
    pub fn states(&self, params: &GateParams, times: &[f64]) -> Result<Vec<TwoQubitState>> {
        match self {
            Propagator::Analytic => times
                .iter()
                .map(|&t| propagate_analytic(params, t))
                .collect(),
            Propagator::Oracle {
                motion,
                hamiltonian,
            } => propagate_oracle_grid(params, motion, *hamiltonian, times),
        }
    }
}

/// Default threshold for calling a grid minimum of `P_1bright` a zero.
pub const ZERO_TOLERANCE: f64 = 1e-3;

/// Grid points where `P_1bright` has a local minimum below `tolerance`. End
/// points count when they are below their single neighbour.
pub fn bright_zeros(populations: &[Populations], tolerance: f64) -> Vec<usize> {
    let p: Vec<f64> = populations.iter().map(|x| x.p1bright).collect();
    let n = p.len();
    (0..n)
        .filter(|&i| {
            let left = i == 0 || p[i] <= p[i - 1];
            let right = i + 1 == n || p[i] <= p[i + 1];
            left && right && p[i] < tolerance
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateResult {
    pub times: Vec<f64>,
    pub populations: Vec<Populations>,
    /// Grid indices of `P_1bright` zeros, in time order.
    pub bright_zeros: Vec<usize>,
    /// `(χ, parity)` of the state at the gate time.
    pub parity_fringe: Vec<(f64, f64)>,
    pub contrast: f64,
    pub fringe_phase: f64,
    pub fit_offset: f64,
    pub fidelity: f64,
    /// Populations at the gate time.
    pub final_populations: Populations,
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() || t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidArgument(
            "time grid must be non-empty with non-negative times".into(),
        ));
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(
            "time grid must be non-decreasing".into(),
        ));
    }
    Ok(())
}

/// Populations on `t_grid` plus the indexed zeros of `P_1bright`.
pub fn population_flopping(
    params: &GateParams,
    propagator: &Propagator,
    t_grid: &[f64],
) -> Result<(Vec<Populations>, Vec<usize>)> {
    check_grid(t_grid)?;
    let pops: Vec<Populations> = propagator
        .states(params, t_grid)?
        .iter()
        .map(TwoQubitState::populations)
        .collect();
    let zeros = bright_zeros(&pops, ZERO_TOLERANCE);
    Ok((pops, zeros))
}

/// Flopping curve on `t_grid`, then the parity protocol on the state at the
/// gate time.
pub fn run_gate(
    params: &GateParams,
    propagator: &Propagator,
    t_grid: &[f64],
    chi_grid: &[f64],
) -> Result<GateResult> {
    check_grid(t_grid)?;
    let mut times = t_grid.to_vec();
    let gate_index = times.partition_point(|&t| t < params.gate_time);
    times.insert(gate_index, params.gate_time);
    let mut states = propagator.states(params, &times)?;
    let final_state = states.remove(gate_index);
    let populations: Vec<Populations> = states.iter().map(TwoQubitState::populations).collect();
    let zeros = bright_zeros(&populations, ZERO_TOLERANCE);
    let fringe = parity_scan(&final_state, chi_grid);
    let fit = fit_parity_contrast(&fringe)?;
    let fp = final_state.populations();
    let fidelity = bell_fidelity(fp.p00, fp.p11, fit.contrast)?;
    Ok(GateResult {
        times: t_grid.to_vec(),
        populations,
        bright_zeros: zeros,
        parity_fringe: fringe,
        contrast: fit.contrast,
        fringe_phase: fit.phase,
        fit_offset: fit.offset,
        fidelity,
        final_populations: fp,
    })
}

/// `n` equally spaced points on `[start, end]`.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| start + (end - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
