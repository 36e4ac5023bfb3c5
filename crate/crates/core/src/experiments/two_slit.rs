use std::f64::consts::PI;

use num_complex::Complex64;

use super::{draw_params, Check, ExperimentConfig, ExperimentResult};
use crate::error::StageExt;
use crate::grid_field::{
    coincidence_report_branches, extended_impulsive_evolve, free_propagate, overlap_integral, synthesize_packets, GridSpec,
    WaveField,
};
use crate::io::profile_table;
use crate::stochastic::{averaged_density, phase_average_matrix};
use crate::{Error, Result};

/// Largest `∫|ψ₁|²|ψ₂|²` allowed at localisation.
pub(crate) const BRANCH_OVERLAP_TOL: f64 = 1e-6;

/// `(max − min)/(max + min)` of `density` over nodes with `|x − center| ≤ half_width`.
pub fn fringe_visibility(grid: &GridSpec, density: &[f64], center: f64, half_width: f64) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, &r) in density.iter().enumerate() {
        if (grid.point(i)[0] - center).abs() <= half_width {
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    if !(hi + lo > 0.0) {
        return 0.0;
    }
    (hi - lo) / (hi + lo)
}

pub(crate) fn run_two_slit(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let units = cfg.units;
    let grid = cfg.grid.as_ref().expect("validated");
    let region = cfg.regions.as_ref().expect("validated");
    let opts = cfg.two_slit.as_ref().expect("resolved");
    let stoch = cfg.stochastic.as_ref().ok_or(Error::Invariant { name: "required_field", message: "stochastic".into() })?;
    let t_loc = cfg.timings.require("t_loc")?;
    let tau = cfg.timings.require("tau")?;
    let t_screen = cfg.timings.require("t_screen")?;
    let mut result = ExperimentResult::new(cfg.scenario, cfg.seed);

    let coeffs: Vec<Complex64> = cfg.packets.iter().map(|p| p.weight).collect();
    let mut branches_loc = Vec::with_capacity(coeffs.len());
    for p in &cfg.packets {
        let mut unit = p.clone();
        unit.weight = Complex64::new(1.0, 0.0);
        let psi = synthesize_packets(grid, cfg.spin_dim, &[unit], units).stage("initial state")?;
        branches_loc.push(free_propagate(&psi, t_loc, units).stage("approach")?);
    }

    let mut worst = 0.0f64;
    for i in 0..branches_loc.len() {
        for j in i + 1..branches_loc.len() {
            worst = worst.max(overlap_integral(&branches_loc[i], &branches_loc[j])?.1);
        }
    }
    result.scalars.insert("branch_overlap".into(), worst);
    if worst >= BRANCH_OVERLAP_TOL {
        return Err(Error::OverlapViolation(format!("∫|ψ₁|²|ψ₂|² = {worst:.3e} at localisation"))).stage("overlap");
    }
    let reports = coincidence_report_branches(&branches_loc, region).stage("coincidence")?;
    for (k, b) in reports.iter().enumerate() {
        if b.box_index != Some(k) {
            return Err(Error::CoincidenceViolation(format!("packet {k} does not sit in box {k}"))).stage("coincidence");
        }
        if !b.report.pass {
            return Err(Error::CoincidenceViolation(b.report.summary())).stage("coincidence");
        }
    }
    result.coincidence = reports.into_iter().map(|b| b.report).collect();

    let mut psi_loc = WaveField::zeros(grid.clone(), cfg.spin_dim).with_time(t_loc);
    for (c, b) in coeffs.iter().zip(&branches_loc) {
        psi_loc = psi_loc.add(&b.clone().scaled(*c))?;
    }
    let draw = draw_params(cfg).expect("stochastic present");
    let localised = extended_impulsive_evolve(&psi_loc, region, &draw.etas, tau, units).stage("localisation")?;
    let single = free_propagate(&localised, t_screen - t_loc - tau, units).stage("flight to screen")?;
    let screen: Vec<WaveField> = branches_loc
        .iter()
        .map(|b| free_propagate(b, t_screen - t_loc, units))
        .collect::<Result<_>>()
        .stage("flight to screen")?;

    // single run rebuilt from branches with their impulse phases
    let mut rebuilt = WaveField::zeros(grid.clone(), cfg.spin_dim).with_time(t_screen);
    for ((c, b), eta) in coeffs.iter().zip(&screen).zip(&draw.etas) {
        rebuilt = rebuilt.add(&b.clone().scaled(c * Complex64::from_polar(1.0, -tau * eta / units.hbar)))?;
    }
    result.scalars.insert("single_run_consistency".into(), single.l2_distance(&rebuilt)?);

    let m = phase_average_matrix(&stoch.density, tau, units.hbar, stoch.method, cfg.execution).stage("phase average")?;
    let coeff_rows: Vec<Vec<Complex64>> = coeffs.iter().map(|c| vec![*c]).collect();
    let branch_rows: Vec<Vec<WaveField>> = screen.iter().map(|b| vec![b.clone()]).collect();
    let averaged = averaged_density(&coeff_rows, &branch_rows, &m).stage("averaged density")?;
    let incoherent: Vec<f64> = (0..grid.len())
        .map(|i| {
            coeffs
                .iter()
                .zip(&screen)
                .map(|(c, b)| (0..cfg.spin_dim).map(|s| (c * b.component(s)[i]).norm_sqr()).sum::<f64>())
                .sum()
        })
        .collect();
    let single_rho = single.density();
    let mut control = WaveField::zeros(grid.clone(), cfg.spin_dim);
    for (c, b) in coeffs.iter().zip(&screen) {
        control = control.add(&b.clone().scaled(*c))?;
    }
    let control_rho = control.density();

    let dev = averaged.iter().zip(&incoherent).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    result.scalars.insert("averaged_minus_incoherent".into(), dev);
    result.scalars.insert("phase_average_max_off_diagonal".into(), m.max_off_diagonal());

    let centers: Vec<f64> = cfg.packets.iter().map(|p| p.center[0]).collect();
    let center = centers.iter().sum::<f64>() / centers.len() as f64;
    let separation = (centers[1] - centers[0]).abs();
    let fringe = 2.0 * PI * units.hbar * t_screen / (units.mass * separation);
    let half = opts.window.unwrap_or(fringe);
    result.scalars.insert("fringe_spacing".into(), fringe);
    result.scalars.insert("window_half_width".into(), half);
    result.visibility.insert("single_run".into(), fringe_visibility(grid, &single_rho, center, half));
    result.visibility.insert("averaged".into(), fringe_visibility(grid, &averaged, center, half));
    result.visibility.insert("incoherent".into(), fringe_visibility(grid, &incoherent, center, half));
    if opts.control {
        result.visibility.insert("control".into(), fringe_visibility(grid, &control_rho, center, half));
    }
    result.checks.push(Check::at_most("branch_overlap", worst, BRANCH_OVERLAP_TOL));
    result.checks.push(Check::at_most("single_run_consistency", result.scalars["single_run_consistency"], 1e-9));
    result.decoherence = Some(m);
    result.draw = Some(draw);
    result.side_tables.insert(
        "screen".into(),
        profile_table(
            &single,
            &[("single_run", &single_rho), ("averaged", &averaged), ("incoherent", &incoherent), ("control", &control_rho)],
        ),
    );
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn visibility_of_cosine_fringes() {
        let grid = GridSpec::line(-8.0, 16.0, 256).unwrap();
        let rho: Vec<f64> = (0..256).map(|i| 1.0 + 0.5 * (grid.point(i)[0] * PI).cos()).collect();
        assert!((fringe_visibility(&grid, &rho, 0.0, 2.0) - 0.5).abs() < 1e-12);
        let flat = vec![1.0; 256];
        assert_eq!(fringe_visibility(&grid, &flat, 0.0, 2.0), 0.0);
    }
}
