//! End-to-end scenarios: Stern–Gerlach, two-slit with localisation, EPR
//! singlet, and single-region localisation.

mod config;
mod epr;
mod localisation;
mod stern_gerlach;
mod sweep;
mod two_slit;

pub use config::{
    parse_config, DeflectionConfig, EnsembleConfig, EnsembleStart, EprConfig, ExperimentConfig, LocalisationConfig,
    LocalisationMode, Scenario, StochasticConfig, Timings, TwoSlitConfig,
};
pub use epr::{epr_tables, EprTables};
pub use localisation::SplitStepHistory;
pub use sweep::{set_path, sweep};
pub use two_slit::fringe_visibility;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::grid_field::CoincidenceReport;
use crate::io::{OutputSet, Table};
use crate::rng::SeedTree;
use crate::stochastic::{CoherenceMatrix, StochasticParams};
use crate::Result;

/// Pass/fail record of one per-run assertion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value <= threshold }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value >= threshold }
    }
}

/// KS distance of the final ensemble against `|ψ|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equivariance {
    pub ks_distance: f64,
    pub critical_value: f64,
    pub samples: usize,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub scenario: Scenario,
    pub seed: u64,
    /// Unflagged trajectories per detector label (`"ex"` outside every box).
    pub counts: BTreeMap<String, usize>,
    /// Reference probabilities per detector label.
    pub probabilities: BTreeMap<String, f64>,
    pub tables: BTreeMap<String, Vec<Vec<f64>>>,
    pub visibility: BTreeMap<String, f64>,
    pub coincidence: Vec<CoincidenceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equivariance: Option<Equivariance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decoherence: Option<CoherenceMatrix>,
    pub flagged: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draw: Option<StochasticParams>,
    pub scalars: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    /// Written as `<name>.csv` next to the result.
    #[serde(skip)]
    pub side_tables: BTreeMap<String, Table>,
}

impl ExperimentResult {
    pub(crate) fn new(scenario: Scenario, seed: u64) -> Self {
        Self {
            scenario,
            seed,
            counts: BTreeMap::new(),
            probabilities: BTreeMap::new(),
            tables: BTreeMap::new(),
            visibility: BTreeMap::new(),
            coincidence: Vec::new(),
            equivariance: None,
            decoherence: None,
            flagged: 0,
            draw: None,
            scalars: BTreeMap::new(),
            checks: Vec::new(),
            side_tables: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.scalars.get(name).copied()
    }

    /// Detector frequencies over unflagged trajectories.
    pub fn frequencies(&self) -> BTreeMap<String, f64> {
        let total: usize = self.counts.values().sum();
        self.counts.iter().map(|(k, &v)| (k.clone(), v as f64 / total.max(1) as f64)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    /// `result.json`, `config.resolved.json` and every side table.
    pub fn outputs(&self, config: &ExperimentConfig) -> OutputSet {
        let mut set = OutputSet::new();
        set.add("result.json", self.to_json());
        set.add("config.resolved.json", config.to_json());
        for (name, table) in &self.side_tables {
            set.add(format!("{name}.csv"), table.to_csv());
        }
        set
    }
}

/// Runs the configured scenario.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    match config.scenario {
        Scenario::SternGerlach => stern_gerlach::run_stern_gerlach(config),
        Scenario::TwoSlit => two_slit::run_two_slit(config),
        Scenario::Epr => epr::run_epr(config),
        Scenario::PointLocalisation => localisation::run_point_localisation(config),
    }
}

/// The single stochastic draw of a run.
pub(crate) fn draw_params(config: &ExperimentConfig) -> Option<StochasticParams> {
    let s = config.stochastic.as_ref()?;
    Some(s.density.sample(&mut SeedTree::new(config.seed).child("stochastic").rng(0)))
}

/// `3·sqrt(p(1−p)/n)`.
pub fn binomial_envelope(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n.max(1) as f64).sqrt()
}
