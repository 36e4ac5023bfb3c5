use std::f64::consts::PI;

use super::{draw_params, Check, Equivariance, ExperimentConfig, ExperimentResult, LocalisationMode};
use crate::bohmian::{
    equivariance_distance, integrate_ensemble, ks_critical_1pct, sample_quantum_equilibrium, Event, FieldHistory,
    IntegrationOptions, Side, Timeline,
};
use crate::error::StageExt;
use crate::grid_field::{
    apply_piecewise_impulse, free_propagate, momentum_expectation, position_expectation, split_step_evolve,
    synthesize_packets, Potential, WaveField, SPLIT_STEP_GUARD,
};
use crate::io::{profile_table, trajectory_table, Table};
use crate::{Error, Result, Units};

/// Free evolution with a potential switched on over `[t_on, t_on + τ]` and
/// integrated by Strang splitting; step fields are cached.
#[derive(Debug, Clone)]
pub struct SplitStepHistory {
    potential: Potential,
    t_on: f64,
    dt: f64,
    steps: Vec<WaveField>,
    units: Units,
}

impl SplitStepHistory {
    /// `field` is the state at `t_on`.
    pub fn new(field: WaveField, potential: Potential, t_on: f64, tau: f64, steps: usize, units: Units) -> Result<Self> {
        let steps = steps.max(1);
        let dt = tau / steps as f64;
        let mut fields = Vec::with_capacity(steps + 1);
        fields.push(field.with_time(t_on));
        for i in 0..steps {
            let next = split_step_evolve(&fields[i], &potential, dt, 1, units)?;
            fields.push(next.with_time(t_on + (i + 1) as f64 * dt));
        }
        Ok(Self { potential, t_on, dt, steps: fields, units })
    }

    fn t_off(&self) -> f64 {
        self.t_on + self.dt * (self.steps.len() - 1) as f64
    }
}

impl FieldHistory for SplitStepHistory {
    fn start_time(&self) -> f64 {
        self.t_on
    }

    fn event_times(&self) -> Vec<f64> {
        vec![self.t_on, self.t_off()]
    }

    fn field_at(&self, t: f64, _side: Side) -> Result<WaveField> {
        let n = self.steps.len() - 1;
        if t < self.t_on {
            return Err(Error::NegativeDuration(t - self.t_on));
        }
        if t >= self.t_off() {
            return free_propagate(&self.steps[n], t - self.t_off(), self.units);
        }
        let s = (t - self.t_on) / self.dt;
        let i = (s.floor() as usize).min(n);
        let rem = t - (self.t_on + i as f64 * self.dt);
        if rem <= 1e-12 * self.dt {
            return Ok(self.steps[i].clone());
        }
        Ok(split_step_evolve(&self.steps[i], &self.potential, rem, 1, self.units)?.with_time(t))
    }
}

enum History {
    Impulsive(Timeline),
    SplitStep(SplitStepHistory),
}

impl FieldHistory for History {
    fn start_time(&self) -> f64 {
        match self {
            History::Impulsive(h) => h.start_time(),
            History::SplitStep(h) => h.start_time(),
        }
    }

    fn event_times(&self) -> Vec<f64> {
        match self {
            History::Impulsive(h) => h.event_times(),
            History::SplitStep(h) => h.event_times(),
        }
    }

    fn field_at(&self, t: f64, side: Side) -> Result<WaveField> {
        match self {
            History::Impulsive(h) => h.field_at(t, side),
            History::SplitStep(h) => h.field_at(t, side),
        }
    }
}

fn max_density_change(a: &WaveField, b: &WaveField) -> f64 {
    a.density().iter().zip(b.density()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub(crate) fn run_point_localisation(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let units = cfg.units;
    let grid = cfg.grid.as_ref().expect("validated");
    let region = cfg.regions.as_ref().expect("validated");
    let ens = cfg.ensemble.as_ref().expect("validated");
    let opts = cfg.localisation.clone().unwrap_or_default();
    let t_loc = cfg.timings.require("t_loc")?;
    let tau = cfg.timings.require("tau")?;
    let t_end = cfg.timings.require("t_end")?;
    let t_off = t_loc + tau;
    let mut result = ExperimentResult::new(cfg.scenario, cfg.seed);

    let etas = match (opts.eta, draw_params(cfg)) {
        (Some(eta), _) => vec![eta; region.len()],
        (None, Some(d)) => {
            let e = d.etas.clone();
            result.draw = Some(d);
            e
        }
        (None, None) => return Err(Error::Invariant { name: "required_field", message: "eta".into() }),
    };
    let psi0 = synthesize_packets(grid, cfg.spin_dim, &cfg.packets, units).stage("initial state")?;
    let psi_loc = free_propagate(&psi0, t_loc, units).stage("approach")?;

    let imprint = apply_piecewise_impulse(&psi_loc, region, &etas, tau, units).stage("impulse")?;
    let density_change = max_density_change(&imprint, &psi_loc);
    let trivial = vec![2.0 * PI * units.hbar / tau; region.len()];
    let periodic = apply_piecewise_impulse(&psi_loc, region, &trivial, tau, units).stage("impulse")?.l2_distance(&psi_loc)?;
    result.scalars.insert("impulse_density_change".into(), density_change);
    result.scalars.insert("periodic_phase_distance".into(), periodic);

    let history = match opts.mode {
        LocalisationMode::Impulsive => History::Impulsive(
            Timeline::new(psi_loc.clone(), units)
                .with_event(t_loc, Event::Impulse { region: region.clone(), etas: etas.clone(), tau })
                .stage("timeline")?,
        ),
        LocalisationMode::SplitStep => {
            let vmax = etas.iter().fold(0.0f64, |m, e| m.max(e.abs()));
            let guard_steps = (tau * vmax / units.hbar / (0.5 * SPLIT_STEP_GUARD)).ceil() as usize;
            let steps = if opts.steps == 0 { guard_steps.max(16) } else { opts.steps };
            result.scalars.insert("split_steps".into(), steps as f64);
            let pot = Potential::Boxes { region: region.clone(), etas: etas.clone() };
            History::SplitStep(SplitStepHistory::new(psi_loc.clone(), pot, t_loc, tau, steps, units).stage("split-step")?)
        }
    };

    let samples = opts.history_samples.max(2);
    let mut times: Vec<f64> = (0..samples).map(|i| t_loc + (t_end - t_loc) * i as f64 / (samples - 1) as f64).collect();
    times.push(t_off);
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut expectations = Table::new(["t", "p", "x"]);
    for &t in &times {
        let f = history.field_at(t, Side::After).stage("expectation history")?;
        expectations.push(vec![t, momentum_expectation(&f, units.hbar)[0], position_expectation(&f)[0]]);
    }
    let p_before = momentum_expectation(&psi_loc, units.hbar)[0];
    let psi_off = history.field_at(t_off, Side::After).stage("expectation history")?;
    let p_after = momentum_expectation(&psi_off, units.hbar)[0];
    result.scalars.insert("eta".into(), etas[0]);
    result.scalars.insert("momentum_before".into(), p_before);
    result.scalars.insert("momentum_after".into(), p_after);
    result.scalars.insert("momentum_change".into(), p_after - p_before);
    result.tables.insert("momentum_history".into(), expectations.rows.clone());
    result.side_tables.insert("momentum_history".into(), expectations);

    let starts = sample_quantum_equilibrium(&psi_loc, &ens.spec(cfg.seed), cfg.execution).stage("sampling")?;
    let iopts = IntegrationOptions {
        dt: ens.dt,
        node_epsilon: ens.node_epsilon,
        spin_rule: ens.spin_rule,
        checkpoints: vec![t_off],
        execution: cfg.execution,
        units,
        ..IntegrationOptions::default()
    };
    let run = integrate_ensemble(&history, &starts, t_loc, t_end, &iopts).stage("trajectories")?;
    let direction = if p_before >= 0.0 { 1.0 } else { -1.0 };
    let mut reflected = 0usize;
    let mut displacement = 0.0;
    let mut live = 0usize;
    for tr in run.trajectories.iter().filter(|t| !t.flagged) {
        let (Some(a), Some(b)) = (tr.position_at(t_off), tr.position_at(t_end)) else { continue };
        live += 1;
        displacement += b[0] - a[0];
        if (b[0] - a[0]) * direction < 0.0 {
            reflected += 1;
        }
    }
    let span = (t_end - t_off).max(f64::MIN_POSITIVE);
    result.scalars.insert("reflected_fraction".into(), reflected as f64 / live.max(1) as f64);
    result.scalars.insert("mean_velocity_after".into(), displacement / (live.max(1) as f64 * span));
    let psi_end = history.field_at(t_end, Side::After).stage("final field")?;
    let finals = run.positions_at(t_end);
    let ks = equivariance_distance(&psi_end, &finals);
    let crit = ks_critical_1pct(finals.len());
    result.equivariance = Some(Equivariance { ks_distance: ks, critical_value: crit, samples: finals.len(), time: t_end });
    result.flagged = run.flagged;
    result.scalars.insert("dt".into(), run.dt);

    result.checks.push(Check::at_most("impulse_density_change", density_change, 1e-12));
    result.checks.push(Check::at_most("periodic_phase_trivial", periodic, 1e-12));
    result.checks.push(Check::at_most("equivariance_ks", ks, crit));
    let rho_end = psi_end.density();
    result.side_tables.insert("density_end".into(), profile_table(&psi_end, &[("density", &rho_end)]));
    result.side_tables.insert("trajectories".into(), trajectory_table(&run.trajectories, grid.dims()));
    Ok(result)
}
