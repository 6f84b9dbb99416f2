use thiserror::Error;

use crate::crystal::ModeLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown ion species `{0}`")]
    UnknownSpecies(String),

    #[error("invalid crystal: {0}")]
    InvalidCrystal(String),

    #[error("equilibrium solver did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NoConvergence {
        iterations: usize,
        gradient_norm: f64,
    },

    #[error(
        "mass-weighted Hessian has non-positive eigenvalue {0:e}; the potential is not confining"
    )]
    AntiConfining(f64),

    #[error("mode {0} not present in mode table")]
    UnknownMode(ModeLabel),

    #[error("no laser configured for species `{0}`")]
    MissingLaser(String),

    #[error("invalid laser for `{species}`: {reason}")]
    InvalidLaser { species: String, reason: String },

    #[error("ion {ion} ({species}) does not couple to mode {mode}")]
    DecoupledIon {
        ion: usize,
        species: String,
        mode: ModeLabel,
    },

    #[error("ions of species `{0}` need different intensities on this mode; a single per-species intensity cannot equalize them")]
    IncompatibleIntensities(String),

    #[error("invalid gate parameters: {0}")]
    InvalidGate(String),

    #[error("invalid motional truncation: {0}")]
    InvalidTruncation(String),

    #[error("Fock truncation leakage {population:e} exceeds 1e-6 at t = {time:e} s; increase n_max (try {suggested_n_max})")]
    Leakage {
        population: f64,
        time: f64,
        suggested_n_max: usize,
    },

    #[error("ODE integrator failed: {0}")]
    Integrator(String),

    #[error("parity fit needs at least 8 points spanning one period, got {points} points spanning {span:.4} rad")]
    InsufficientFringe { points: usize, span: f64 },

    #[error("parity fit is singular")]
    SingularFit,

    #[error("unphysical fidelity inputs: {0}")]
    Unphysical(String),

    #[error("wrong chain shape: {0}")]
    ChainShape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::AntiConfining(_)
                | Error::Leakage { .. }
                | Error::Integrator(_)
                | Error::SingularFit
        )
    }
}
