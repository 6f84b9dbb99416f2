//! Command-line front end for the `ionmix` library.

pub mod commands;
pub mod config;
pub mod render;

use ionmix::Error;

/// Exit status for a failed run: 3 for numerical failures (truncation
/// leakage, solver non-convergence), 2 for everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_numerical() => 3,
        _ => 2,
    }
}
