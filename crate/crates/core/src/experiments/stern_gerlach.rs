use std::collections::BTreeMap;

use super::{binomial_envelope, draw_params, Check, EnsembleStart, Equivariance, ExperimentConfig, ExperimentResult};
use crate::bohmian::{
    detector_assignment, equivariance_distance, integrate_ensemble, ks_critical_1pct, sample_quantum_equilibrium, Event,
    FieldHistory, IntegrationOptions, Side, Timeline,
};
use crate::error::StageExt;
use crate::grid_field::{
    coincidence_report, extended_impulsive_evolve, free_propagate, synthesize_packets, Region, WaveField, EXTERIOR_LABEL,
};
use crate::io::{profile_table, trajectory_table};
use crate::stochastic::decoherence_matrix;
use crate::{Error, Result};

/// Largest mass of a foreign branch tolerated inside a detector box.
pub(crate) const DETECTOR_OVERLAP_TOL: f64 = 1e-6;

/// `mass[c][b]`: mass of component `c` inside box `b`.
pub(crate) fn component_box_masses(field: &WaveField, region: &Region) -> Result<Vec<Vec<f64>>> {
    let assign = region.assign(field.grid())?;
    let dv = field.grid().cell_volume();
    Ok((0..field.spin_dim())
        .map(|c| {
            let mut m = vec![0.0; region.len()];
            for (z, a) in field.component(c).iter().zip(&assign) {
                if let Some(b) = a {
                    m[*b] += z.norm_sqr() * dv;
                }
            }
            m
        })
        .collect())
}

pub(crate) fn run_stern_gerlach(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let units = cfg.units;
    let grid = cfg.grid.as_ref().expect("validated");
    let region = cfg.regions.as_ref().expect("validated");
    let ens = cfg.ensemble.as_ref().expect("validated");
    let t_def = cfg.timings.require("t_def")?;
    let t_loc = cfg.timings.require("t_loc")?;
    let tau = cfg.timings.require("tau")?;
    let t_end = t_loc + tau;
    let mut result = ExperimentResult::new(cfg.scenario, cfg.seed);

    let psi0 = synthesize_packets(grid, cfg.spin_dim, &cfg.packets, units).stage("initial state")?;
    let psi_def = free_propagate(&psi0, t_def, units).stage("approach")?;
    let deflection = cfg.deflection.as_ref().expect("validated").to_deflection(cfg.spin_dim).stage("deflection")?;
    let event = Event::Deflection(deflection);
    let deflected = Timeline::new(psi_def.clone(), units).with_event(t_def, event.clone()).stage("deflection")?;
    let psi_loc = deflected.field_at(t_loc, Side::Before).stage("flight to detectors")?;

    let report = coincidence_report(&psi_loc, region).stage("coincidence")?;
    let pass = report.pass;
    let summary = report.summary();
    result.coincidence.push(report);
    if !pass {
        return Err(Error::CoincidenceViolation(summary)).stage("coincidence");
    }

    // component → detector and foreign-branch mass per detector
    let masses = component_box_masses(&psi_loc, region).stage("branch masses")?;
    let owner: Vec<usize> = masses
        .iter()
        .map(|m| (0..m.len()).max_by(|&a, &b| m[a].total_cmp(&m[b])).unwrap_or(0))
        .collect();
    let mut worst = 0.0f64;
    for (b, label) in region.labels().enumerate() {
        let foreign: f64 = (0..cfg.spin_dim).filter(|&c| owner[c] != b).map(|c| masses[c][b]).sum();
        worst = worst.max(foreign);
        let own: f64 = (0..cfg.spin_dim).filter(|&c| owner[c] == b).map(|c| masses[c][b]).sum();
        result.scalars.insert(format!("branch_mass:{label}"), own);
    }
    result.scalars.insert("detector_overlap".into(), worst);
    if worst > DETECTOR_OVERLAP_TOL {
        return Err(Error::OverlapViolation(format!("foreign branch mass {worst:.3e} inside a detector"))).stage("detectors");
    }
    let labels: Vec<String> = region.labels().map(String::from).collect();
    for label in &labels {
        result.probabilities.insert(label.clone(), 0.0);
    }
    for p in &cfg.packets {
        *result.probabilities.get_mut(&labels[owner[p.spin_index]]).expect("label") += p.weight.norm_sqr();
    }

    let draw = draw_params(cfg).ok_or(Error::Invariant { name: "required_field", message: "stochastic".into() })?;
    let psi_after = extended_impulsive_evolve(&psi_loc, region, &draw.etas, tau, units).stage("localisation")?;
    let stoch = cfg.stochastic.as_ref().expect("resolved");
    if let Some(pointer) = &stoch.pointer {
        let m = decoherence_matrix(pointer, &stoch.density, tau, stoch.method, cfg.execution).stage("decoherence")?;
        result.scalars.insert("decoherence_max_off_diagonal".into(), m.max_off_diagonal());
        result.side_tables.insert("decoherence".into(), crate::io::coherence_table(&m));
        result.decoherence = Some(m);
    }

    let impulse = Event::Impulse { region: region.clone(), etas: draw.etas.clone(), tau };
    let (history, start_field, t0) = match ens.start {
        EnsembleStart::Localisation => {
            (Timeline::new(psi_loc.clone(), units).with_event(t_loc, impulse).stage("timeline")?, &psi_loc, t_loc)
        }
        EnsembleStart::Deflection => (deflected.with_event(t_loc, impulse).stage("timeline")?, &psi_def, t_def),
    };
    let starts = sample_quantum_equilibrium(start_field, &ens.spec(cfg.seed), cfg.execution).stage("sampling")?;
    let opts = IntegrationOptions {
        dt: ens.dt,
        node_epsilon: ens.node_epsilon,
        spin_rule: ens.spin_rule,
        checkpoints: vec![t_loc],
        execution: cfg.execution,
        units,
        ..IntegrationOptions::default()
    };
    let run = integrate_ensemble(&history, &starts, t0, t_end, &opts).stage("trajectories")?;
    let psi_end = history.field_at(t_end, Side::After).stage("final field")?;
    result.scalars.insert("history_consistency".into(), psi_end.l2_distance(&psi_after)?);

    let mut counts: BTreeMap<String, usize> = labels.iter().map(|l| (l.clone(), 0)).collect();
    counts.insert(EXTERIOR_LABEL.into(), 0);
    for tr in run.trajectories.iter().filter(|t| !t.flagged) {
        *counts.entry(detector_assignment(tr, region, t_end)).or_default() += 1;
    }
    let finals = run.positions_at(t_end);
    let n = finals.len();
    let ks = equivariance_distance(&psi_end, &finals);
    result.equivariance = Some(Equivariance { ks_distance: ks, critical_value: ks_critical_1pct(n), samples: n, time: t_end });
    result.flagged = run.flagged;
    result.counts = counts;
    result.draw = Some(draw);
    result.scalars.insert("dt".into(), run.dt);
    result.scalars.insert("steps".into(), run.steps as f64);

    let freqs = result.frequencies();
    for label in &labels {
        let p = result.probabilities[label];
        let f = freqs[label];
        result.checks.push(Check::at_most(format!("frequency:{label}"), (f - p).abs(), binomial_envelope(p, n)));
    }
    result.checks.push(Check::at_most("history_consistency", result.scalars["history_consistency"], 1e-9));

    let rho_loc: Vec<Vec<f64>> = (0..cfg.spin_dim).map(|c| psi_loc.component_density(c)).collect();
    let names: Vec<String> = (0..cfg.spin_dim).map(|c| format!("density{c}")).collect();
    let cols: Vec<(&str, &[f64])> = names.iter().map(String::as_str).zip(rho_loc.iter().map(Vec::as_slice)).collect();
    result.side_tables.insert("density_loc".into(), profile_table(&psi_loc, &cols));
    result.side_tables.insert("trajectories".into(), trajectory_table(&run.trajectories, grid.dims()));
    Ok(result)
}
