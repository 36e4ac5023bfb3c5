use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bohmian::{EnsembleSpec, SpinRule};
use crate::grid_field::{GridSpec, PacketParams, Region, SgDeflection};
use crate::stochastic::{Marginal, Method, ParamDensity, PointerModel};
use crate::{Error, Execution, Result, Units};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    SternGerlach,
    TwoSlit,
    Epr,
    PointLocalisation,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::SternGerlach => "stern_gerlach",
            Scenario::TwoSlit => "two_slit",
            Scenario::Epr => "epr",
            Scenario::PointLocalisation => "point_localisation",
        }
    }

    fn needs_grid(self) -> bool {
        self != Scenario::Epr
    }
}

/// Stern–Gerlach window: `α = μB(0)` and `Δp = μ ∂B/∂z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeflectionConfig {
    #[serde(default)]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub db_dz: Option<f64>,
    #[serde(default)]
    pub axis: usize,
    /// `μ_j` per component; `m_j/s` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multipliers: Option<Vec<f64>>,
}

impl DeflectionConfig {
    pub fn to_deflection(&self, spin_dim: usize) -> Result<SgDeflection> {
        let dp = self.delta_p.ok_or(Error::Invariant { name: "deflection_momentum", message: "delta_p unresolved".into() })?;
        match &self.multipliers {
            Some(m) => Ok(SgDeflection::with_multipliers(self.alpha, dp, self.axis, m.clone())),
            None => SgDeflection::for_spin(self.alpha, dp, self.axis, spin_dim),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochasticConfig {
    pub density: ParamDensity,
    #[serde(default)]
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pointer: Option<PointerModel>,
}

/// Where Stern–Gerlach trajectories are sampled from `|ψ|²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleStart {
    #[default]
    Localisation,
    Deflection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub count: usize,
    #[serde(default = "default_node_epsilon")]
    pub node_epsilon: f64,
    #[serde(default)]
    pub spin_rule: SpinRule,
    #[serde(default)]
    pub start: EnsembleStart,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

fn default_node_epsilon() -> f64 {
    1e-8
}

impl EnsembleConfig {
    pub fn spec(&self, seed: u64) -> EnsembleSpec {
        EnsembleSpec { count: self.count, seed, node_epsilon: self.node_epsilon }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_def: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_loc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_screen: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
}

impl Timings {
    pub(crate) fn require(&self, name: &'static str) -> Result<f64> {
        let v = match name {
            "t_def" => self.t_def,
            "t_loc" => self.t_loc,
            "tau" => self.tau,
            "t_screen" => self.t_screen,
            "t_end" => self.t_end,
            _ => None,
        };
        v.ok_or_else(|| Error::Invariant { name: "required_field", message: format!("timings.{name} is required") })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoSlitConfig {
    /// Half-width of the visibility window; one fringe spacing when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[serde(default = "yes")]
    pub control: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EprConfig {
    /// Phase of the single coherent run.
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "full_period")]
    pub alpha_density: Marginal,
    #[serde(default)]
    pub method: Method,
}

fn full_period() -> Marginal {
    Marginal::Uniform { lower: 0.0, upper: 2.0 * PI }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalisationMode {
    /// Phase imprint followed by free propagation.
    #[default]
    Impulsive,
    /// Strang splitting with the box potential switched on for `τ`.
    SplitStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalisationConfig {
    #[serde(default)]
    pub mode: LocalisationMode,
    /// Box energy; drawn from the stochastic density when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Split-step substeps over `τ`; chosen from the accuracy guard when zero.
    #[serde(default)]
    pub steps: usize,
    /// Number of `⟨P⟩` history samples.
    #[serde(default = "default_history")]
    pub history_samples: usize,
}

fn default_history() -> usize {
    50
}

impl Default for LocalisationConfig {
    fn default() -> Self {
        Self { mode: LocalisationMode::default(), eta: None, steps: 0, history_samples: default_history() }
    }
}

fn default_spin_dim() -> usize {
    1
}

/// Full description of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub seed: u64,
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub execution: Execution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default = "default_spin_dim")]
    pub spin_dim: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub packets: Vec<PacketParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regions: Option<Region>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deflection: Option<DeflectionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stochastic: Option<StochasticConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default)]
    pub timings: Timings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_slit: Option<TwoSlitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epr: Option<EprConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub localisation: Option<LocalisationConfig>,
}

/// Parses JSON, fills defaults and checks every invariant.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Schema { path, message: e.into_inner().to_string() }
    })?;
    cfg.resolve()
}

fn invariant(name: &'static str, message: impl Into<String>) -> Error {
    Error::Invariant { name, message: message.into() }
}

impl ExperimentConfig {
    /// Applies scenario defaults, then validates.
    pub fn resolve(mut self) -> Result<Self> {
        let hbar = self.units.hbar;
        if !(hbar > 0.0 && self.units.mass > 0.0) {
            return Err(invariant("positive_units", "hbar and mass must be positive"));
        }
        if let Some(d) = &mut self.deflection {
            match (d.delta_p, d.mu, d.db_dz) {
                (None, Some(mu), Some(g)) => d.delta_p = Some(mu * g),
                (Some(dp), Some(mu), Some(g)) if (dp - mu * g).abs() > 1e-12 * (1.0 + dp.abs()) => {
                    return Err(invariant("deflection_momentum", format!("delta_p {dp} differs from mu·db_dz = {}", mu * g)));
                }
                (None, _, _) => return Err(invariant("deflection_momentum", "give delta_p or both mu and db_dz")),
                _ => {}
            }
        }
        match self.scenario {
            Scenario::SternGerlach | Scenario::PointLocalisation => {
                if self.scenario == Scenario::SternGerlach && self.timings.t_def.is_none() {
                    self.timings.t_def = Some(0.0);
                }
                self.default_stochastic(hbar);
                if self.scenario == Scenario::PointLocalisation && self.localisation.is_none() {
                    self.localisation = Some(LocalisationConfig::default());
                }
            }
            Scenario::TwoSlit => {
                if self.timings.t_loc.is_none() {
                    self.timings.t_loc = Some(0.0);
                }
                self.default_stochastic(hbar);
                if self.two_slit.is_none() {
                    self.two_slit = Some(TwoSlitConfig { window: None, control: true });
                }
            }
            Scenario::Epr => {
                if self.epr.is_none() {
                    self.epr = Some(EprConfig { alpha: 0.0, alpha_density: full_period(), method: Method::default() });
                }
            }
        }
        self.validate()?;
        Ok(self)
    }

    /// Independent full-period uniform `η_k` per box, `y` uniform over one
    /// pointer width.
    fn default_stochastic(&mut self, hbar: f64) {
        if self.stochastic.is_some() {
            return;
        }
        let (Some(regions), Some(tau)) = (&self.regions, self.timings.tau) else {
            return;
        };
        if !(tau > 0.0) {
            return;
        }
        let pointer = PointerModel { width: 1.0, k0: 20.0 };
        let eta = Marginal::Uniform { lower: 0.0, upper: 2.0 * PI * hbar / tau };
        self.stochastic = Some(StochasticConfig {
            density: ParamDensity::independent(vec![eta; regions.len()], Marginal::Uniform { lower: -0.5, upper: 0.5 }),
            method: Method::default(),
            pointer: Some(pointer),
        });
    }

    pub fn validate(&self) -> Result<()> {
        let scenario = self.scenario.name();
        let missing = |what: &str| invariant("required_field", format!("{scenario} requires '{what}'"));
        if self.scenario.needs_grid() {
            let grid = self.grid.as_ref().ok_or_else(|| missing("grid"))?;
            if self.packets.is_empty() {
                return Err(missing("packets"));
            }
            let total: f64 = self.packets.iter().map(|p| p.weight.norm_sqr()).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(invariant("normalization", format!("Σ|c|² = {total}, expected 1 within 1e-9")));
            }
            if self.spin_dim == 0 {
                return Err(invariant("spin_dim", "spin_dim must be at least 1"));
            }
            if let Some(p) = self.packets.iter().find(|p| p.spin_index >= self.spin_dim) {
                return Err(invariant("spin_dim", format!("packet in component {} of a {}-component field", p.spin_index, self.spin_dim)));
            }
            let regions = self.regions.as_ref().ok_or_else(|| missing("regions"))?;
            regions.assign(grid).map_err(|e| invariant("regions_aligned", e.to_string()))?;
            if let Some(s) = &self.stochastic {
                s.density.validate()?;
                if s.density.len() != regions.len() {
                    return Err(invariant(
                        "etas_match_regions",
                        format!("{} η marginals for {} boxes", s.density.len(), regions.len()),
                    ));
                }
                if let Some(p) = &s.pointer {
                    p.validate()?;
                }
            }
            if let Some(e) = &self.ensemble {
                e.spec(self.seed).validate()?;
            }
        }
        let t = &self.timings;
        if let Some(tau) = t.tau {
            if !(tau > 0.0) {
                return Err(invariant("stage_times_increasing", format!("tau = {tau} must be positive")));
            }
        }
        let mut stages: Vec<(&str, f64)> = Vec::new();
        if let Some(v) = t.t_def {
            stages.push(("t_def", v));
        }
        if let Some(v) = t.t_loc {
            stages.push(("t_loc", v));
            if let Some(tau) = t.tau {
                stages.push(("t_loc+tau", v + tau));
            }
        }
        if let Some(v) = t.t_screen {
            stages.push(("t_screen", v));
        }
        if let Some(v) = t.t_end {
            stages.push(("t_end", v));
        }
        if stages.iter().any(|(_, v)| !v.is_finite() || *v < 0.0) {
            return Err(invariant("stage_times_increasing", "stage times must be finite and non-negative"));
        }
        for w in stages.windows(2) {
            let strict = w[1].0 != "t_screen" && w[1].0 != "t_end";
            if w[1].1 < w[0].1 || (strict && w[1].1 <= w[0].1) {
                return Err(invariant("stage_times_increasing", format!("{} = {} precedes {} = {}", w[1].0, w[1].1, w[0].0, w[0].1)));
            }
        }
        match self.scenario {
            Scenario::SternGerlach => {
                if self.spin_dim < 2 {
                    return Err(invariant("spin_dim", "Stern–Gerlach needs at least two components"));
                }
                let d = self.deflection.as_ref().ok_or_else(|| missing("deflection"))?;
                d.to_deflection(self.spin_dim)?;
                if d.multipliers.as_ref().is_some_and(|m| m.len() != self.spin_dim) {
                    return Err(invariant("spin_dim", "one deflection multiplier per component"));
                }
                t.require("t_loc")?;
                t.require("tau")?;
                self.ensemble.as_ref().ok_or_else(|| missing("ensemble"))?;
            }
            Scenario::TwoSlit => {
                if self.packets.len() < 2 {
                    return Err(invariant("two_branches", "two-slit needs at least two packets"));
                }
                if self.regions.as_ref().is_some_and(|r| r.len() != self.packets.len()) {
                    return Err(invariant("etas_match_regions", "one localisation box per packet"));
                }
                t.require("tau")?;
                t.require("t_screen")?;
            }
            Scenario::PointLocalisation => {
                t.require("t_loc")?;
                t.require("tau")?;
                t.require("t_end")?;
                self.ensemble.as_ref().ok_or_else(|| missing("ensemble"))?;
                let has_eta = self.localisation.as_ref().is_some_and(|l| l.eta.is_some());
                if !has_eta && self.stochastic.is_none() {
                    return Err(missing("localisation.eta or stochastic"));
                }
            }
            Scenario::Epr => {
                if let Some(e) = &self.epr {
                    e.alpha_density.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Resolved configuration as pretty JSON; re-parses to an identical value.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
