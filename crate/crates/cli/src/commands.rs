//! The subcommands. Each returns its rendered forms; `main` decides where
//! they go.

use std::f64::consts::TAU;

use anyhow::Result;
use ionmix::budget::{
    error_2xip, error_2xip_at, find_near_degeneracies, isotope_scan, mode_advisor, rank_by_gap,
    sideband_spectrum, Layout, ScanEntry, ALL_LAYOUTS,
};
use ionmix::coupling::{lamb_dicke, CouplingTable, LaserField};
use ionmix::crystal::{normal_modes, ModeTable};
use ionmix::msgate::{
    calibrate_gate, calibrate_gate_on, linspace, run_gate, with_compensated_ramp, GateParams,
    GateResult, Hamiltonian, MotionalSpec, Propagator,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{mode_label, HamiltonianChoice, RunConfig};
use crate::render::{fixed3, khz, Table};

/// One command's output in every format.
#[derive(Debug, Clone)]
pub struct Report {
    /// Titled sections for the aligned-text form, three decimals.
    pub sections: Vec<(Option<String>, Table)>,
    /// Full-precision table for CSV.
    pub csv: Table,
    pub json: Value,
}

impl Report {
    pub fn text(&self, color: bool) -> String {
        let mut out = String::new();
        for (i, (title, table)) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            if let Some(t) = title {
                out.push_str(t);
                out.push('\n');
            }
            out.push_str(&table.to_text(color));
        }
        out
    }
}

/// Shortest round-trip form, with an exponent for very small or large values.
fn full(x: f64) -> String {
    format!("{x:?}")
}

fn lasers(config: &RunConfig, modes: &ModeTable) -> Result<Vec<LaserField>> {
    let mut out: Vec<LaserField> = Vec::new();
    for s in &modes.ions {
        if out.iter().any(|l| l.species == s.label) {
            continue;
        }
        let laser = match config.lasers.iter().find(|l| l.species == s.label) {
            Some(b) => {
                LaserField::from_intensity(s, b.wavevector_axis_projection, b.intensity_rel, 1.0)?
            }
            None => LaserField::parallel(s, 1.0),
        };
        out.push(laser);
    }
    Ok(out)
}

fn modes_and_coupling(config: &RunConfig) -> Result<(ModeTable, CouplingTable)> {
    let crystal = config.crystal()?;
    let modes = normal_modes(&crystal)?;
    let coupling = lamb_dicke(&modes, &lasers(config, &modes)?)?;
    Ok((modes, coupling))
}

/// Mode frequencies, eigenvectors and Lamb-Dicke parameters of the
/// configured crystal.
pub fn modes(config: &RunConfig) -> Result<Report> {
    let (modes, coupling) = modes_and_coupling(config)?;
    let n = modes.ions.len();
    let ion_names: Vec<String> = modes
        .ions
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}#{i}", s.label))
        .collect();
    let mut text_headers = vec!["mode".to_string(), "w/w_ref".into(), "w/w_IP".into()];
    text_headers.extend(ion_names.iter().map(|s| format!("b[{s}]")));
    text_headers.extend(ion_names.iter().map(|s| format!("eta[{s}]")));
    text_headers.push("f (2pi x kHz)".into());
    let mut csv_headers = vec![
        "mode".to_string(),
        "frequency_hz".into(),
        "ratio_reference".into(),
        "ratio_ip".into(),
    ];
    csv_headers.extend((0..n).map(|i| format!("b_{i}")));
    csv_headers.extend((0..n).map(|i| format!("eta_{i}")));

    let mut text = Table::new(text_headers);
    let mut csv = Table::new(csv_headers);
    let mut rows = Vec::new();
    let ip = modes.ip_frequency();
    for m in &modes.modes {
        let etas: Vec<f64> = (0..n)
            .map(|i| coupling.eta(i, m.label))
            .collect::<ionmix::Result<_>>()?;
        let ratio_ref = m.frequency / modes.reference_frequency;
        let ratio_ip = m.frequency / ip;
        let mut t = vec![m.label.long_name(), fixed3(ratio_ref), fixed3(ratio_ip)];
        t.extend(m.eigenvector.iter().map(|&b| fixed3(b)));
        t.extend(etas.iter().map(|&e| fixed3(e)));
        t.push(format!("{:.3}", khz(m.frequency)));
        text.push(t);
        let mut c = vec![
            m.label.to_string(),
            full(m.frequency / TAU),
            full(ratio_ref),
            full(ratio_ip),
        ];
        c.extend(m.eigenvector.iter().map(|&b| full(b)));
        c.extend(etas.iter().map(|&e| full(e)));
        csv.push(c);
        rows.push(json!({
            "mode": m.label,
            "frequency_hz": m.frequency / TAU,
            "ratio_reference": ratio_ref,
            "ratio_ip": ratio_ip,
            "eigenvector": m.eigenvector,
            "eta": etas,
        }));
    }
    Ok(Report {
        sections: vec![(
            Some(format!(
                "{}  (reference {} at 2pi x {:.3} kHz)",
                modes
                    .ions
                    .iter()
                    .map(|s| s.label.as_str())
                    .collect::<Vec<_>>()
                    .join("-"),
                modes.reference_label,
                khz(modes.reference_frequency)
            )),
            text,
        )],
        csv,
        json: json!({
            "ions": modes.ions.iter().map(|s| &s.label).collect::<Vec<_>>(),
            "reference_species": modes.reference_label,
            "reference_frequency_hz": modes.reference_frequency / TAU,
            "equilibrium_positions_m": modes.equilibrium_positions,
            "modes": rows,
        }),
    })
}

/// `b` as printed in the mode table: magnitudes for two-ion chains, signed
/// for three-ion chains.
fn table_b(entry: &ScanEntry, b: f64) -> f64 {
    if entry.layout == Layout::TwoIon {
        b.abs()
    } else {
        b
    }
}

/// Mode table for every pair and layout drawn from the species pool.
pub fn table(config: &RunConfig, rank_gaps: bool) -> Result<Report> {
    let reference = TAU * config.crystal.reference_frequency_hz;
    let entries = isotope_scan(&config.pool()?, &ALL_LAYOUTS, reference)?;
    let ranking = rank_by_gap(&entries);
    let rank_of = |i: usize| ranking.iter().position(|&r| r == i).unwrap_or(0) + 1;

    let mut text_headers: Vec<String> = [
        "configuration",
        "mode",
        "w/w_ref",
        "w/w_IP",
        "b_heavy",
        "b_light",
        "eta_heavy",
        "eta_light",
    ]
    .map(String::from)
    .to_vec();
    let mut csv_headers: Vec<String> = [
        "configuration",
        "mode",
        "ratio_reference",
        "ratio_ip",
        "b_heavy",
        "b_light",
        "eta_heavy",
        "eta_light",
    ]
    .map(String::from)
    .to_vec();
    if rank_gaps {
        text_headers.extend(["margin (2pi x kHz)", "nearest"].map(String::from));
        csv_headers.extend(["margin_hz", "nearest", "gap_rank"].map(String::from));
    }
    let mut text = Table::new(text_headers);
    let mut csv = Table::new(csv_headers);
    for (i, e) in entries.iter().enumerate() {
        for r in &e.rows {
            let mut t = vec![
                r.configuration.clone(),
                r.mode.long_name(),
                fixed3(r.ratio_reference),
                fixed3(r.ratio_ip),
                fixed3(table_b(e, r.b_heavy)),
                fixed3(table_b(e, r.b_light)),
                fixed3(r.eta_heavy),
                fixed3(r.eta_light),
            ];
            let mut c = vec![
                r.configuration.clone(),
                r.mode.to_string(),
                full(r.ratio_reference),
                full(r.ratio_ip),
                full(table_b(e, r.b_heavy)),
                full(table_b(e, r.b_light)),
                full(r.eta_heavy),
                full(r.eta_light),
            ];
            if rank_gaps {
                t.extend([format!("{:.3}", khz(r.margin)), r.nearest.to_string()]);
                c.extend([
                    full(r.margin / TAU),
                    r.nearest.to_string(),
                    rank_of(i).to_string(),
                ]);
            }
            text.push(t);
            csv.push(c);
        }
    }
    let mut sections = vec![(
        Some(format!(
            "Mode table, heavy species at 2pi x {:.3} kHz",
            khz(reference)
        )),
        text,
    )];
    let mut json = json!({ "reference_frequency_hz": config.crystal.reference_frequency_hz, "entries": entries });
    if rank_gaps {
        let mut gaps = Table::new([
            "rank",
            "configuration",
            "margin (2pi x kHz)",
            "closest lines",
        ]);
        let mut ranked = Vec::new();
        for (k, &i) in ranking.iter().enumerate() {
            let e = &entries[i];
            let margin = e.min_margin();
            // equal margins are common: OOP against 2xIP mirrors IP against OOP-IP
            let closest: Vec<_> = e
                .rows
                .iter()
                .filter(|r| r.margin - margin <= 1e-9 * margin)
                .collect();
            gaps.push(vec![
                (k + 1).to_string(),
                e.configuration.clone(),
                format!("{:.3}", khz(margin)),
                closest
                    .iter()
                    .map(|r| format!("{}/{}", r.mode, r.nearest))
                    .collect::<Vec<_>>()
                    .join(", "),
            ]);
            ranked.push(json!({
                "configuration": e.configuration,
                "margin_hz": margin / TAU,
                "closest": closest.iter().map(|r| json!({"mode": r.mode, "nearest": r.nearest})).collect::<Vec<_>>(),
            }));
        }
        sections.push((
            Some("Ranked by smallest sideband gap (largest first)".into()),
            gaps,
        ));
        json["gap_ranking"] = Value::Array(ranked);
    }
    Ok(Report {
        sections,
        csv,
        json,
    })
}

/// Calibrated gate parameters as the configuration describes them.
pub fn gate_params(config: &RunConfig) -> Result<GateParams> {
    let g = config.gate()?;
    let mode = mode_label(&g.mode)?;
    let (_, coupling) = modes_and_coupling(config)?;
    let gate_time = match (g.gate_time_us, g.detuning_hz) {
        (Some(t), _) => t * 1e-6,
        (None, Some(d)) => f64::from(g.loops) / d,
        (None, None) => unreachable!("validated"),
    };
    let mut p = match g.qubits {
        Some(q) => calibrate_gate_on(&coupling, mode, q, gate_time, g.loops)?,
        None => calibrate_gate(&coupling, mode, gate_time, g.loops)?,
    };
    p.bell_phase = g.bell_phase;
    for (label, &n) in &g.nbar {
        p.set_nbar(mode_label(label)?, n);
    }
    p.thermal.sort_by_key(|t| t.0);
    if g.ramp_fraction != 0.0 {
        p = with_compensated_ramp(&p, g.ramp_fraction)?;
    }
    for d in &mut p.drives {
        if let Some(hz) = config
            .lasers
            .iter()
            .find(|l| l.species == d.species)
            .and_then(|l| l.carrier_rabi_hz)
        {
            d.carrier_rabi = TAU * hz;
        }
    }
    p.validate()?;
    Ok(p)
}

fn propagator(config: &RunConfig, params: &GateParams) -> Result<Propagator> {
    let o = &config.oracle;
    if !o.enabled {
        return Ok(Propagator::Analytic);
    }
    let labels = if o.modes.is_empty() {
        vec![params.mode]
    } else {
        o.modes
            .iter()
            .map(|m| mode_label(m))
            .collect::<Result<Vec<_>>>()?
    };
    let truncation: Vec<_> = labels.into_iter().map(|l| (l, o.n_max)).collect();
    Ok(Propagator::Oracle {
        motion: MotionalSpec::from_params(params, &truncation),
        hamiltonian: match o.hamiltonian {
            HamiltonianChoice::Full => Hamiltonian::Full,
            HamiltonianChoice::Ld => Hamiltonian::LambDicke,
        },
    })
}

/// Written artifacts of a gate run.
#[derive(Debug, Clone)]
pub struct GateArtifacts {
    /// `times_us,P00,P1bright,P11`
    pub populations_csv: String,
    /// `chi_rad,parity`
    pub parity_csv: String,
    pub summary: Value,
    pub result: GateResult,
}

#[derive(Serialize)]
struct DriveSummary<'a> {
    ion: usize,
    species: &'a str,
    carrier_rabi_hz: f64,
    eta: f64,
    phase_offset_rad: f64,
}

pub const POPULATIONS_FILE: &str = "gate_populations.csv";
pub const PARITY_FILE: &str = "gate_parity.csv";
pub const SUMMARY_FILE: &str = "gate_summary.json";

/// Population flopping, parity scan and fidelity of the configured gate.
pub fn gate(config: &RunConfig) -> Result<GateArtifacts> {
    let g = config.gate()?;
    let p = gate_params(config)?;
    let prop = propagator(config, &p)?;
    let times = linspace(0.0, p.gate_time, g.time_points);
    let chi = linspace(0.0, TAU, g.chi_points);
    let result = run_gate(&p, &prop, &times, &chi)?;

    let mut pops = Table::new(["times_us", "P00", "P1bright", "P11"]);
    for (t, x) in result.times.iter().zip(&result.populations) {
        pops.push(vec![
            full(t * 1e6),
            full(x.p00),
            full(x.p1bright),
            full(x.p11),
        ]);
    }
    let mut parity = Table::new(["chi_rad", "parity"]);
    for (c, v) in &result.parity_fringe {
        parity.push(vec![full(*c), full(*v)]);
    }
    let drives: Vec<DriveSummary> = p
        .drives
        .iter()
        .map(|d| {
            Ok(DriveSummary {
                ion: d.ion,
                species: &d.species,
                carrier_rabi_hz: d.carrier_rabi / TAU,
                eta: d.eta(p.mode)?,
                phase_offset_rad: d.phase_offset,
            })
        })
        .collect::<ionmix::Result<_>>()?;
    let propagator_json = match &prop {
        Propagator::Analytic => json!("analytic"),
        Propagator::Oracle {
            motion,
            hamiltonian,
        } => json!({ "oracle": hamiltonian, "motion": motion }),
    };
    let summary = json!({
        "config": config,
        "calibration": {
            "mode": p.mode,
            "detuning_hz": p.detuning / TAU,
            "gate_time_us": p.gate_time * 1e6,
            "loops": p.loops,
            "ramp": p.ramp,
            "bell_phase_rad": p.bell_phase,
            "thermal": p.thermal,
            "drives": drives,
        },
        "propagator": propagator_json,
        "final_populations": result.final_populations,
        "p1bright_at_gate_time": result.final_populations.p1bright,
        "contrast": result.contrast,
        "fringe_phase_rad": result.fringe_phase,
        "fit_offset": result.fit_offset,
        "fidelity": result.fidelity,
        "bright_zeros": result.bright_zeros.iter().map(|&i| json!({
            "index": i,
            "time_us": result.times[i] * 1e6,
        })).collect::<Vec<_>>(),
    });
    Ok(GateArtifacts {
        populations_csv: pops.to_csv()?,
        parity_csv: parity.to_csv()?,
        summary,
        result,
    })
}

fn key_values(pairs: &[(&str, String)]) -> Table {
    let mut t = Table::new(["quantity", "value"]);
    for (k, v) in pairs {
        t.push(vec![k.to_string(), v.clone()]);
    }
    t
}

/// Second-order in-phase error of an out-of-phase gate.
pub fn budget(config: &RunConfig) -> Result<Report> {
    let crystal = config.crystal()?;
    let omega_ip = normal_modes(&crystal)?.ip_frequency();
    let b = &config.budget;
    let e = match b.detuning_hz {
        Some(hz) => error_2xip_at(&crystal, omega_ip, b.nbar, TAU * hz, b.loops)?,
        None => error_2xip(&crystal, omega_ip, b.nbar, b.loops)?,
    };
    let json = json!({
        "inputs": { "crystal": config.crystal, "budget": config.budget },
        "crystal": e.crystal,
        "gate_mode": e.gate_mode,
        "collision": e.collision,
        "ip_frequency_hz": e.omega_ip / TAU,
        "oop_frequency_hz": e.omega_oop / TAU,
        "gap_hz": e.gap / TAU,
        "detuning_hz": e.detuning / TAU,
        "collision_detuning_hz": e.collision_detuning / TAU,
        "gate_time_us": e.gate_time * 1e6,
        "loops": e.loops,
        "carrier_rabi_hz": e.rabi.iter().map(|r| r / TAU).collect::<Vec<_>>(),
        "eta_ip": e.eta_ip,
        "eta_oop": e.eta_oop,
        "displacement_sq": e.displacement_sq,
        "nbar": e.nbar,
        "epsilon": e.epsilon,
    });
    let text = key_values(&[
        ("crystal", e.crystal.clone()),
        ("gate mode", e.gate_mode.to_string()),
        ("collision line", e.collision.to_string()),
        ("w_IP (2pi x kHz)", format!("{:.3}", khz(e.omega_ip))),
        ("w_OOP (2pi x kHz)", format!("{:.3}", khz(e.omega_oop))),
        ("2w_IP - w_OOP (2pi x kHz)", format!("{:.3}", khz(e.gap))),
        ("detuning (2pi x kHz)", format!("{:.3}", khz(e.detuning))),
        ("gate time (us)", format!("{:.3}", e.gate_time * 1e6)),
        ("|alpha|^2", format!("{:.6}", e.displacement_sq)),
        ("nbar", format!("{}", e.nbar)),
        ("epsilon", format!("{:.6}", e.epsilon)),
    ]);
    let mut csv = Table::new(["quantity", "value"]);
    for (k, v) in json.as_object().into_iter().flatten() {
        if k != "inputs" {
            csv.push(vec![k.clone(), v.to_string().trim_matches('"').to_string()]);
        }
    }
    Ok(Report {
        sections: vec![(None, text)],
        csv,
        json,
    })
}

/// Mode advisor: every (mode, gate time) candidate ranked.
pub fn scan(config: &RunConfig) -> Result<Report> {
    let crystal = config.crystal()?;
    let times: Vec<f64> = config.scan.gate_times_us.iter().map(|t| t * 1e-6).collect();
    let recs = mode_advisor(&crystal, &times, TAU * config.scan.window_khz * 1e3)?;
    let mut text = Table::new([
        "rank",
        "mode",
        "t_g (us)",
        "delta (2pi x kHz)",
        "margin (2pi x kHz)",
        "nearest",
        "min eta",
        "eps_2xIP",
        "verdict",
    ]);
    let mut csv = Table::new([
        "rank",
        "mode",
        "gate_time_us",
        "detuning_hz",
        "margin_hz",
        "nearest",
        "min_eta",
        "epsilon_2xip",
        "decoupled_ions",
        "conflicts",
        "passes",
    ]);
    let mut rows = Vec::new();
    for (k, r) in recs.iter().enumerate() {
        let verdict = if !r.decoupled.is_empty() {
            format!("decoupled ion {:?}", r.decoupled)
        } else if !r.conflicts.is_empty() {
            format!(
                "conflict {}",
                r.conflicts
                    .iter()
                    .map(|c| c.line.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            )
        } else {
            "ok".into()
        };
        text.push(vec![
            (k + 1).to_string(),
            r.mode.to_string(),
            format!("{:.1}", r.gate_time * 1e6),
            format!("{:.3}", khz(r.detuning)),
            format!("{:.3}", khz(r.margin)),
            r.nearest.to_string(),
            fixed3(r.min_eta),
            r.epsilon_2xip.map_or("-".into(), |e| format!("{e:.2e}")),
            verdict,
        ]);
        csv.push(vec![
            (k + 1).to_string(),
            r.mode.to_string(),
            full(r.gate_time * 1e6),
            full(r.detuning / TAU),
            full(r.margin / TAU),
            r.nearest.to_string(),
            full(r.min_eta),
            r.epsilon_2xip.map_or(String::new(), full),
            r.decoupled
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(";"),
            r.conflicts
                .iter()
                .map(|c| c.line.to_string())
                .collect::<Vec<_>>()
                .join(";"),
            r.passes.to_string(),
        ]);
        rows.push(json!({
            "rank": k + 1,
            "mode": r.mode,
            "gate_time_us": r.gate_time * 1e6,
            "detuning_hz": r.detuning / TAU,
            "margin_hz": r.margin / TAU,
            "nearest": r.nearest,
            "conflicts": r.conflicts.iter().map(|c| json!({"line": c.line, "distance_hz": c.distance / TAU})).collect::<Vec<_>>(),
            "epsilon_2xip": r.epsilon_2xip,
            "decoupled_ions": r.decoupled,
            "min_eta": r.min_eta,
            "passes": r.passes,
        }));
    }
    Ok(Report {
        sections: vec![(
            Some(format!("Gate-mode candidates for {}", crystal.name())),
            text,
        )],
        csv,
        json: json!({ "crystal": crystal.name(), "window_khz": config.scan.window_khz, "candidates": rows }),
    })
}

/// Pairs of sideband lines (up to second order) closer than the window.
pub fn degeneracies(config: &RunConfig) -> Result<Report> {
    let crystal = config.crystal()?;
    let (modes, coupling) = modes_and_coupling(config)?;
    let spectrum = sideband_spectrum(&modes, &coupling, 2)?;
    let pairs = find_near_degeneracies(&spectrum, TAU * config.scan.window_khz * 1e3)?;
    let mut text = Table::new([
        "lower",
        "upper",
        "lower (2pi x kHz)",
        "upper (2pi x kHz)",
        "gap (2pi x kHz)",
        "gate line",
    ]);
    let mut csv = Table::new([
        "lower",
        "upper",
        "lower_offset_hz",
        "upper_offset_hz",
        "gap_hz",
        "gate_relevant",
    ]);
    let mut rows = Vec::new();
    for d in &pairs {
        text.push(vec![
            d.lower.combination.to_string(),
            d.upper.combination.to_string(),
            format!("{:.3}", khz(d.lower.offset)),
            format!("{:.3}", khz(d.upper.offset)),
            format!("{:.3}", khz(d.gap)),
            if d.gate_relevant { "yes" } else { "no" }.into(),
        ]);
        csv.push(vec![
            d.lower.combination.to_string(),
            d.upper.combination.to_string(),
            full(d.lower.offset / TAU),
            full(d.upper.offset / TAU),
            full(d.gap / TAU),
            d.gate_relevant.to_string(),
        ]);
        rows.push(json!({
            "lower": d.lower.combination,
            "upper": d.upper.combination,
            "lower_offset_hz": d.lower.offset / TAU,
            "upper_offset_hz": d.upper.offset / TAU,
            "gap_hz": d.gap / TAU,
            "gate_relevant": d.gate_relevant,
        }));
    }
    Ok(Report {
        sections: vec![(
            Some(format!(
                "Sideband pairs of {} within 2pi x {} kHz",
                crystal.name(),
                config.scan.window_khz
            )),
            text,
        )],
        csv,
        json: json!({ "crystal": crystal.name(), "window_khz": config.scan.window_khz, "pairs": rows }),
    })
}
