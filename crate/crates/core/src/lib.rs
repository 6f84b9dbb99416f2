//! Mode structure, spin-motion coupling, Mølmer-Sørensen gate dynamics and
//! gate error budgets for mixed-species trapped-ion crystals.
//!
//! All frequencies inside the library are angular (rad/s) and all lengths
//! are SI meters.

pub mod budget;
pub mod coupling;
pub mod crystal;
pub mod error;
pub mod msgate;
pub mod species;

pub use error::{Error, Result};
