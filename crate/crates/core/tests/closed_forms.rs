use approx::{assert_abs_diff_eq, assert_relative_eq};
use ionmix::crystal::{
    closed_form_three_ion_symmetric, closed_form_two_ion, normal_modes, CrystalConfig, ModeTable,
};
use ionmix::species::lookup;

const TAU: f64 = std::f64::consts::TAU;

/// `order[i]` is the closed-form index of numeric ion `i`.
fn compare(numeric: &ModeTable, closed: &ModeTable, order: &[usize], name: &str) {
    assert_eq!(numeric.modes.len(), closed.modes.len(), "{name}");
    for (i, &j) in order.iter().enumerate() {
        assert_eq!(numeric.ions[i].label, closed.ions[j].label, "{name}");
    }
    for (n, c) in numeric.modes.iter().zip(&closed.modes) {
        assert_eq!(n.label, c.label, "{name}");
        assert_relative_eq!(n.frequency, c.frequency, max_relative = 1e-9);
        for (i, &j) in order.iter().enumerate() {
            assert_abs_diff_eq!(
                n.eigenvector[i].abs(),
                c.eigenvector[j].abs(),
                epsilon = 1e-9
            );
        }
    }
}

#[test]
fn numeric_modes_match_closed_forms_for_all_configurations() {
    let start = std::time::Instant::now();
    let f = TAU * 660e3;
    for ca in ["40Ca+", "43Ca+"] {
        for sr in ["88Sr+", "86Sr+"] {
            let (light, heavy) = (lookup(ca).unwrap(), lookup(sr).unwrap());

            let two =
                CrystalConfig::new(vec![light.clone(), heavy.clone()], heavy.clone(), f).unwrap();
            compare(
                &normal_modes(&two).unwrap(),
                &closed_form_two_ion(&heavy, &light, f),
                &[1, 0],
                &two.name(),
            );

            let light_outer = CrystalConfig::new(
                vec![light.clone(), heavy.clone(), light.clone()],
                light.clone(),
                f,
            )
            .unwrap();
            compare(
                &normal_modes(&light_outer).unwrap(),
                &closed_form_three_ion_symmetric(&light, &heavy, f),
                &[0, 1, 2],
                &light_outer.name(),
            );

            let heavy_outer = CrystalConfig::new(
                vec![heavy.clone(), light.clone(), heavy.clone()],
                heavy.clone(),
                f,
            )
            .unwrap();
            compare(
                &normal_modes(&heavy_outer).unwrap(),
                &closed_form_three_ion_symmetric(&heavy, &light, f),
                &[0, 1, 2],
                &heavy_outer.name(),
            );
        }
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn closed_form_two_ion_is_order_independent_of_reference() {
    // the numeric solver may take either ion as reference; frequencies scale
    let sr = lookup("88Sr+").unwrap();
    let ca = lookup("40Ca+").unwrap();
    let f = TAU * 1e6;
    let by_sr =
        normal_modes(&CrystalConfig::new(vec![ca.clone(), sr.clone()], sr.clone(), f).unwrap())
            .unwrap();
    let f_ca = f * (sr.mass / ca.mass).sqrt();
    let by_ca =
        normal_modes(&CrystalConfig::new(vec![ca, sr], lookup("40Ca+").unwrap(), f_ca).unwrap())
            .unwrap();
    for (a, b) in by_sr.modes.iter().zip(&by_ca.modes) {
        assert_relative_eq!(a.frequency, b.frequency, max_relative = 1e-12);
    }
}
