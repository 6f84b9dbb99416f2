//! Cross-checks between the analytic propagator and the Fock-space oracle.

use std::f64::consts::TAU;

use ionmix::budget::error_2xip;
use ionmix::coupling::{lamb_dicke, parallel_lasers, CouplingTable, LaserField};
use ionmix::crystal::{normal_modes, CrystalConfig, ModeLabel};
use ionmix::error::Error;
use ionmix::msgate::{
    bell_fidelity, calibrate_gate, fit_parity_contrast, linspace, parity_scan, population_flopping,
    propagate_analytic, propagate_oracle, propagate_oracle_grid, GateParams, Hamiltonian,
    InitialMotion, MotionalMode, MotionalSpec, Propagator, TwoQubitState,
};
use ionmix::species::lookup;

fn coupling(labels: &[&str], reference: &str, f_hz: f64) -> CouplingTable {
    let c = CrystalConfig::from_labels(labels, reference, TAU * f_hz).unwrap();
    let m = normal_modes(&c).unwrap();
    lamb_dicke(&m, &parallel_lasers(&m, 1.0)).unwrap()
}

fn ca_ca(t_g: f64, loops: u32) -> GateParams {
    calibrate_gate(
        &coupling(&["40Ca+", "40Ca+"], "40Ca+", 1e6),
        ModeLabel::IP,
        t_g,
        loops,
    )
    .unwrap()
}

fn fidelity(s: &TwoQubitState) -> f64 {
    let fit = fit_parity_contrast(&parity_scan(s, &linspace(0.0, TAU, 64))).unwrap();
    let p = s.populations();
    bell_fidelity(p.p00, p.p11, fit.contrast).unwrap()
}

fn ground(n_max: usize) -> MotionalSpec {
    MotionalSpec::single(ModeLabel::IP, n_max, InitialMotion::Ground)
}

#[test]
fn lamb_dicke_oracle_tracks_analytic_populations() {
    for (nbar, n_max) in [(0.0, 40), (0.5, 40), (2.0, 48)] {
        let mut p = ca_ca(71e-6, 1);
        p.set_nbar(ModeLabel::IP, nbar);
        let times = linspace(0.0, p.gate_time, 100);
        let motion = MotionalSpec::from_params(&p, &[(ModeLabel::IP, n_max)]);
        let oracle = propagate_oracle_grid(&p, &motion, Hamiltonian::LambDicke, &times).unwrap();
        let worst = times
            .iter()
            .zip(&oracle)
            .map(|(&t, s)| {
                propagate_analytic(&p, t)
                    .unwrap()
                    .populations()
                    .max_abs_diff(&s.populations())
            })
            .fold(0.0, f64::max);
        assert!(worst <= 1e-6, "n̄ {nbar}: {worst:e}");
    }
}

#[test]
fn four_loop_calibration_reaches_the_bell_state() {
    let p = ca_ca(400e-6, 4);
    let s = propagate_oracle(&p, &ground(16), Hamiltonian::Full, p.gate_time).unwrap();
    let f = fidelity(&s.conjugate());
    assert!(f >= 0.9999, "{f}");
}

#[test]
fn doubled_drive_over_rotates() {
    let p = ca_ca(71e-6, 1);
    let mut hot = p.clone();
    for d in &mut hot.drives {
        d.carrier_rabi *= 2.0;
    }
    let base = propagate_oracle(&p, &ground(24), Hamiltonian::Full, p.gate_time).unwrap();
    let over = propagate_oracle(&hot, &ground(24), Hamiltonian::Full, p.gate_time).unwrap();
    assert!(over.populations().p1bright > 0.0);
    assert!(fidelity(&over.conjugate()) < fidelity(&base.conjugate()) - 0.1);
}

#[test]
fn contrast_equals_twice_the_coherence() {
    let p = ca_ca(71e-6, 1);
    for t in [0.3, 0.7, 1.0].map(|x| x * p.gate_time) {
        let s = propagate_analytic(&p, t).unwrap();
        let fit = fit_parity_contrast(&parity_scan(&s, &linspace(0.0, TAU, 64))).unwrap();
        assert!((fit.contrast - 2.0 * s.coherence().norm()).abs() < 1e-6);
    }
}

#[test]
fn bright_zero_census_agrees_between_propagators() {
    let p = ca_ca(71e-6, 1);
    let grid = linspace(0.0, p.gate_time, 121);
    let (_, analytic) = population_flopping(&p, &Propagator::Analytic, &grid).unwrap();
    let oracle = Propagator::Oracle {
        motion: ground(20),
        hamiltonian: Hamiltonian::Full,
    };
    let (_, full) = population_flopping(&p, &oracle, &grid).unwrap();
    assert_eq!(analytic, full);
    // the gate time is the second zero, counting the start
    assert_eq!(analytic, vec![0, grid.len() - 1]);
}

#[test]
fn small_truncation_reports_leakage() {
    let mut p = ca_ca(71e-6, 1);
    p.set_nbar(ModeLabel::IP, 2.0);
    let motion = MotionalSpec::from_params(&p, &[(ModeLabel::IP, 12)]);
    match propagate_oracle(&p, &motion, Hamiltonian::LambDicke, p.gate_time) {
        Err(Error::Leakage {
            suggested_n_max, ..
        }) => assert!(suggested_n_max > 12),
        other => panic!("expected leakage, got {other:?}"),
    }
}

/// Worst-case dual-species gate on the out-of-phase mode with both modes in
/// the simulation space; the infidelity comes from the second-order in-phase
/// line and should match the perturbative estimate.
#[test]
fn full_model_infidelity_matches_the_collision_estimate() {
    let ca = lookup("40Ca+").unwrap();
    let sr = lookup("88Sr+").unwrap();
    let omega_ip = TAU * 1e6;
    let crystal = CrystalConfig::new(vec![ca.clone(), sr.clone()], sr.clone(), omega_ip).unwrap();
    let budget = error_2xip(&crystal, omega_ip, 0.0, 1).unwrap();

    let unscaled = normal_modes(&crystal).unwrap();
    let modes = normal_modes(&crystal.scaled(omega_ip / unscaled.ip_frequency()).unwrap()).unwrap();
    // counter-propagating Ca beam so both ions see the same sign on every mode
    let lasers = [
        LaserField::from_intensity(&ca, -1.0, 1.0, 1.0).unwrap(),
        LaserField::parallel(&sr, 1.0),
    ];
    let k = lamb_dicke(&modes, &lasers).unwrap();
    let p = calibrate_gate(&k, ModeLabel::OOP, budget.gate_time, 1).unwrap();
    let motion = MotionalSpec {
        modes: vec![
            MotionalMode {
                label: ModeLabel::IP,
                n_max: 18,
                initial: InitialMotion::Ground,
            },
            MotionalMode {
                label: ModeLabel::OOP,
                n_max: 14,
                initial: InitialMotion::Ground,
            },
        ],
    };
    let s = propagate_oracle(&p, &motion, Hamiltonian::Full, p.gate_time).unwrap();
    let infidelity = 1.0 - fidelity(&s.conjugate());
    let ratio = infidelity / budget.epsilon;
    assert!(
        (0.5..=2.0).contains(&ratio),
        "1-F {infidelity:e}, ε {:e}",
        budget.epsilon
    );
}
