use std::f64::consts::{PI, TAU};

use ionmix::budget::{error_2xip, find_near_degeneracies, sideband_spectrum};
use ionmix::coupling::{lamb_dicke, parallel_lasers, CouplingTable};
use ionmix::crystal::{normal_modes, CrystalConfig, ModeLabel};
use ionmix::msgate::{
    bell_fidelity, calibrate_gate, fit_parity_contrast, linspace, loop_integrals, parity_scan,
    propagate_analytic, GateParams,
};
use ionmix::species::registry;
use proptest::prelude::*;

const PAIRS: [(&str, &str); 3] = [("40Ca+", "40Ca+"), ("88Sr+", "88Sr+"), ("40Ca+", "88Sr+")];

fn coupling(labels: &[&str], f_hz: f64) -> CouplingTable {
    let c = CrystalConfig::from_labels(labels, labels[0], TAU * f_hz).unwrap();
    let m = normal_modes(&c).unwrap();
    lamb_dicke(&m, &parallel_lasers(&m, 1.0)).unwrap()
}

fn gate(pair: usize, f_hz: f64, t_g: f64, loops: u32) -> GateParams {
    let (a, b) = PAIRS[pair];
    calibrate_gate(&coupling(&[a, b], f_hz), ModeLabel::IP, t_g, loops).unwrap()
}

fn fidelity(p: &GateParams) -> f64 {
    let s = propagate_analytic(p, p.gate_time).unwrap();
    let fit = fit_parity_contrast(&parity_scan(&s, &linspace(0.0, TAU, 64))).unwrap();
    let pop = s.populations();
    bell_fidelity(pop.p00, pop.p11, fit.contrast).unwrap()
}

fn chain() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..registry().len(), 1..6)
}

fn config(indices: &[usize], f_hz: f64) -> CrystalConfig {
    let ions: Vec<_> = indices.iter().map(|&i| registry()[i].clone()).collect();
    CrystalConfig::new(ions.clone(), ions[0].clone(), TAU * f_hz).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn analytic_states_are_normalized_and_hermitian(
        pair in 0..3usize, f in 0.5e6..2e6f64, t_g in 50e-6..300e-6f64,
        loops in 1..5u32, nbar in 0.0..3.0f64, frac in 0.0..1.5f64,
    ) {
        let mut p = gate(pair, f, t_g, loops);
        p.set_nbar(ModeLabel::IP, nbar);
        let s = propagate_analytic(&p, frac * t_g).unwrap();
        prop_assert!((s.trace() - 1.0).abs() < 1e-10);
        prop_assert!((s.rho - s.rho.adjoint()).norm() < 1e-10);
        prop_assert!(s.eigenvalues()[0] > -1e-10);
        let pop = s.populations();
        prop_assert!((pop.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn loop_closes_at_every_multiple_of_the_period(
        pair in 0..3usize, t_g in 50e-6..300e-6f64, loops in 1..8u32, m in 1..8u32,
    ) {
        let mut p = gate(pair, 1e6, t_g, loops);
        let delta = p.detuning * (0.3 + f64::from(m) / 5.0);
        p.detuning = delta;
        let (alpha, phi) = loop_integrals(&p, TAU * f64::from(m) / delta);
        prop_assert!(alpha.norm() * delta < 1e-9);
        prop_assert!((phi - TAU * f64::from(m) / (delta * delta)).abs() < 1e-9 * phi);
    }

    #[test]
    fn calibrated_gate_closes_its_loop(pair in 0..3usize, t_g in 50e-6..300e-6f64, loops in 1..8u32) {
        let p = gate(pair, 1e6, t_g, loops);
        let s = propagate_analytic(&p, t_g).unwrap();
        prop_assert!(s.populations().p1bright < 1e-9);
        prop_assert!(s.entropy() < 1e-8);
    }

    #[test]
    fn closed_loop_fidelity_is_independent_of_temperature(
        pair in 0..3usize, t_g in 50e-6..300e-6f64, loops in 1..4u32, nbar in 0.0..5.0f64,
    ) {
        let mut p = gate(pair, 1e6, t_g, loops);
        let cold = fidelity(&p);
        p.set_nbar(ModeLabel::IP, nbar);
        prop_assert!((fidelity(&p) - cold).abs() < 1e-6);
    }

    #[test]
    fn parity_and_fidelity_stay_in_range(
        pair in 0..3usize, frac in 0.0..1.0f64, nbar in 0.0..3.0f64, scale in 0.2..2.0f64,
    ) {
        let mut p = gate(pair, 1e6, 100e-6, 1);
        p.set_nbar(ModeLabel::IP, nbar);
        for d in &mut p.drives {
            d.carrier_rabi *= scale;
        }
        let s = propagate_analytic(&p, frac * p.gate_time).unwrap();
        let fringe = parity_scan(&s, &linspace(0.0, TAU, 32));
        prop_assert!(fringe.iter().all(|(_, x)| x.abs() <= 1.0));
        let fit = fit_parity_contrast(&fringe).unwrap();
        let pop = s.populations();
        let f = bell_fidelity(pop.p00.max(0.0), pop.p11.max(0.0), fit.contrast.min(1.0)).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((fit.contrast - 2.0 * s.coherence().norm()).abs() < 1e-9);
    }

    #[test]
    fn degeneracies_are_symmetric_and_grow_with_window(
        ions in chain(), f in 0.3e6..2e6f64, w1 in 1e3..100e3f64, w2 in 1e3..100e3f64,
    ) {
        let c = config(&ions, f);
        let m = normal_modes(&c).unwrap();
        let k = lamb_dicke(&m, &parallel_lasers(&m, 1.0)).unwrap();
        let spectrum = sideband_spectrum(&m, &k, 2).unwrap();
        let (small, large) = (TAU * w1.min(w2), TAU * w1.max(w2));
        let narrow = find_near_degeneracies(&spectrum, small).unwrap();
        let wide = find_near_degeneracies(&spectrum, large).unwrap();
        prop_assert!(narrow.len() <= wide.len());
        for d in &narrow {
            prop_assert!(d.gap < small);
            prop_assert!(wide.iter().any(|e| e.lower == d.lower && e.upper == d.upper));
        }
        for d in &wide {
            prop_assert!(d.lower.offset <= d.upper.offset);
            // every line has a mirror image, so every pair has one too
            let mirrored = wide.iter().any(|e| {
                e.lower.combination.0.iter().map(|(l, n)| (*l, -n)).eq(d.upper.combination.0.iter().copied())
                    && e.upper.combination.0.iter().map(|(l, n)| (*l, -n)).eq(d.lower.combination.0.iter().copied())
            });
            prop_assert!(mirrored);
        }
    }

    #[test]
    fn frequencies_scale_with_confinement(ions in chain(), f in 0.3e6..2e6f64, factor in 0.2..5.0f64) {
        let c = config(&ions, f);
        let a = normal_modes(&c).unwrap();
        let b = normal_modes(&c.scaled(factor).unwrap()).unwrap();
        for (x, y) in a.modes.iter().zip(&b.modes) {
            prop_assert!((y.frequency / (x.frequency * factor) - 1.0).abs() < 1e-9);
            for (u, v) in x.eigenvector.iter().zip(&y.eigenvector) {
                prop_assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn reversing_the_chain_mirrors_the_modes(ions in chain(), f in 0.3e6..2e6f64) {
        let c = config(&ions, f);
        let a = normal_modes(&c).unwrap();
        let b = normal_modes(&c.reversed()).unwrap();
        for (x, y) in a.modes.iter().zip(&b.modes) {
            prop_assert!((x.frequency / y.frequency - 1.0).abs() < 1e-9);
            for (u, v) in x.eigenvector.iter().zip(y.eigenvector.iter().rev()) {
                prop_assert!((u.abs() - v.abs()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn epsilon_is_linear_in_two_nbar_plus_one(
        ca in prop::sample::select(vec!["40Ca+", "43Ca+"]),
        sr in prop::sample::select(vec!["86Sr+", "88Sr+"]),
        f in 0.5e6..2e6f64, nbar in 0.0..10.0f64,
    ) {
        let c = CrystalConfig::from_labels(&[ca, sr], sr, TAU * f).unwrap();
        let cold = error_2xip(&c, TAU * f, 0.0, 1).unwrap().epsilon;
        let hot = error_2xip(&c, TAU * f, nbar, 1).unwrap().epsilon;
        prop_assert!((hot / cold - (2.0 * nbar + 1.0)).abs() < 1e-12 * (2.0 * nbar + 1.0));
    }
}

#[test]
fn ideal_fidelity_limit() {
    for pair in 0..3 {
        let p = gate(pair, 1e6, 71e-6, 1);
        assert!((fidelity(&p) - 1.0).abs() < 1e-9);
        assert!((p.bell_phase - PI / 2.0).abs() < 1e-15);
    }
}
