//! Invariant and oracle suite behind the `verify` subcommand.
//!
//! Each group recomputes a known identity or statistical property with an
//! independent method and reports one or more [`CheckReport`]s.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::bohmian::{
    equivariance_distance, integrate_ensemble, ks_critical_1pct, sample_quantum_equilibrium, EnsembleSpec, Event,
    FieldHistory, IntegrationOptions, Side, Timeline,
};
use crate::experiments::{epr_tables, fringe_visibility, parse_config, run_experiment, ExperimentConfig};
use crate::grid_field::{
    apply_piecewise_impulse, coincidence_report, extended_impulsive_evolve, free_propagate, kick_check, split_step_evolve,
    synthesize_packets, GridSpec, PacketParams, Potential, Region, SmoothPotential,
};
use crate::operator_algebra::{
    bch_eta_truncated, coarse_grained_exp, matrix_exp_oracle, tensor_factor_exp, two_factor_exp, Operator, PhaseVector,
    Projector, ProjectorPartition, Spectral,
};
use crate::quadrature::GaussLegendre;
use crate::rng::SeedTree;
use crate::stochastic::{
    decoherence_matrix, overbar_average, pointer_overlap, Marginal, Method, ParamDensity, PointerModel,
};
use crate::{Error, Execution, Result, Units};

/// Shipped scenario configs, `(name, json)`.
pub const DEFAULT_CONFIGS: [(&str, &str); 5] = [
    ("stern_gerlach_half", include_str!("../../../configs/stern_gerlach_half.json")),
    ("stern_gerlach_one", include_str!("../../../configs/stern_gerlach_one.json")),
    ("two_slit", include_str!("../../../configs/two_slit.json")),
    ("epr", include_str!("../../../configs/epr.json")),
    ("point_localisation", include_str!("../../../configs/point_localisation.json")),
];

/// Check groups in execution order.
pub const GROUPS: [&str; 11] = [
    "operator_identities",
    "bch_scaling",
    "impulse_invariance",
    "momentum_kick",
    "impulsive_vs_split_step",
    "epr_tables",
    "two_slit_visibility",
    "equivariance",
    "stern_gerlach_statistics",
    "decoherence_matrix",
    "determinism",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub group: String,
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
    /// `"<="` or `">="`.
    pub relation: &'static str,
    pub detail: String,
}

impl CheckReport {
    pub fn at_most(group: &str, name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            group: group.into(),
            name: name.into(),
            pass: value <= threshold,
            value,
            threshold,
            relation: "<=",
            detail: String::new(),
        }
    }

    pub fn at_least(group: &str, name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            group: group.into(),
            name: name.into(),
            pass: value >= threshold,
            value,
            threshold,
            relation: ">=",
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        let mut s = format!("{status} {}/{}: {:.3e} {} {:.3e}", self.group, self.name, self.value, self.relation, self.threshold);
        if !self.detail.is_empty() {
            s.push_str(&format!(" ({})", self.detail));
        }
        s
    }
}

/// Outcome of one group.
#[derive(Debug, Clone, Serialize)]
pub struct GroupReport {
    pub group: String,
    pub seconds: f64,
    pub checks: Vec<CheckReport>,
    /// Set when the group aborted with an error.
    pub error: Option<String>,
}

impl GroupReport {
    pub fn passed(&self) -> bool {
        self.error.is_none() && !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub seed: u64,
    pub execution: Execution,
    /// Trajectory count of the equivariance group.
    pub trajectories: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 20240611, execution: Execution::Parallel, trajectories: 10_000 }
    }
}

/// Group names selected by `filters` (exact name or prefix); all groups when
/// `filters` is empty.
pub fn select_groups(filters: &[String]) -> Result<Vec<&'static str>> {
    if filters.is_empty() {
        return Ok(GROUPS.to_vec());
    }
    for f in filters {
        if !GROUPS.iter().any(|g| g.starts_with(f.as_str())) {
            return Err(Error::Schema {
                path: "check".into(),
                message: format!("unknown check '{f}'; available: {}", GROUPS.join(", ")),
            });
        }
    }
    Ok(GROUPS.iter().copied().filter(|g| filters.iter().any(|f| g.starts_with(f.as_str()))).collect())
}

pub fn run_group(name: &str, opts: &VerifyOptions) -> Result<Vec<CheckReport>> {
    match name {
        "operator_identities" => operator_identities(100, opts.seed),
        "bch_scaling" => bch_scaling(10, opts.seed),
        "impulse_invariance" => impulse_invariance(opts.seed),
        "momentum_kick" => momentum_kick(),
        "impulsive_vs_split_step" => impulsive_vs_split_step(),
        "epr_tables" => epr_checks(20, opts.seed, opts.execution),
        "two_slit_visibility" => two_slit_visibility(opts.execution),
        "equivariance" => equivariance(opts.trajectories, opts.seed, opts.execution),
        "stern_gerlach_statistics" => stern_gerlach_statistics(opts.execution),
        "decoherence_matrix" => decoherence_checks(opts.seed, opts.execution),
        "determinism" => determinism(opts.execution),
        other => Err(Error::Schema { path: "check".into(), message: format!("unknown check '{other}'") }),
    }
}

/// Runs the selected groups; group errors are recorded, not propagated.
pub fn run_suite(groups: &[&str], opts: &VerifyOptions) -> Vec<GroupReport> {
    groups
        .iter()
        .map(|g| {
            let start = Instant::now();
            let (checks, error) = match run_group(g, opts) {
                Ok(c) => (c, None),
                Err(e) => (Vec::new(), Some(e.to_string())),
            };
            GroupReport { group: g.to_string(), seconds: start.elapsed().as_secs_f64(), checks, error }
        })
        .collect()
}

pub fn default_config(name: &str) -> Result<ExperimentConfig> {
    let (_, text) = DEFAULT_CONFIGS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Schema { path: "config".into(), message: format!("no shipped config '{name}'") })?;
    parse_config(text)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn gaussian_matrix<R: Rng>(dim: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(dim, dim, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn random_unitary<R: Rng>(dim: usize, rng: &mut R) -> DMatrix<Complex64> {
    gaussian_matrix(dim, rng).qr().q()
}

/// Hermitian with unit Frobenius norm.
fn random_hermitian<R: Rng>(dim: usize, rng: &mut R) -> Operator {
    let g = gaussian_matrix(dim, rng);
    let h = (&g + g.adjoint()) * c(0.5, 0.0);
    let n = h.norm();
    Operator::new(h / c(n, 0.0)).expect("square")
}

/// Columns of a random unitary split into `1..=dim` consecutive groups.
fn random_partition<R: Rng>(dim: usize, rng: &mut R) -> Result<ProjectorPartition> {
    let u = random_unitary(dim, rng);
    let parts = rng.random_range(1..=dim);
    let mut cuts: Vec<usize> = (1..dim).collect();
    for i in (1..cuts.len()).rev() {
        cuts.swap(i, rng.random_range(0..=i));
    }
    let mut cuts: Vec<usize> = cuts.into_iter().take(parts - 1).collect();
    cuts.push(0);
    cuts.push(dim);
    cuts.sort_unstable();
    let projectors = cuts
        .windows(2)
        .map(|w| {
            let cols: Vec<DVector<Complex64>> = (w[0]..w[1]).map(|j| u.column(j).into_owned()).collect();
            Projector::from_basis(&cols)
        })
        .collect::<Result<Vec<_>>>()?;
    ProjectorPartition::new(projectors)
}

fn generator(terms: impl IntoIterator<Item = (f64, Operator)>, dim: usize) -> Result<Operator> {
    let mut g = Operator::zeros(dim);
    for (a, p) in terms {
        g = g.add(&p.scale(c(0.0, a)))?;
    }
    Ok(g)
}

/// Closed-form unitaries against the exponential of their generators.
pub fn operator_identities(cases: usize, seed: u64) -> Result<Vec<CheckReport>> {
    const G: &str = "operator_identities";
    let stream = SeedTree::new(seed).child("verify.operators");
    let mut worst = [0.0f64; 3];
    for i in 0..cases {
        let mut rng = stream.rng(i as u64);
        let dim = rng.random_range(2..=16);
        let part = random_partition(dim, &mut rng)?;
        let alphas: Vec<f64> = (0..part.len()).map(|_| rng.random_range(-PI..PI)).collect();
        let u = coarse_grained_exp(&part, &PhaseVector::new(alphas.clone())?)?;
        let g = generator(alphas.iter().zip(part.projectors()).map(|(a, p)| (*a, p.operator().clone())), dim)?;
        worst[0] = worst[0].max(u.distance(&matrix_exp_oracle(&g)?));

        let (d1, d2) = (rng.random_range(2..=4), rng.random_range(2..=4));
        let (pr, ps) = (random_partition(d1, &mut rng)?, random_partition(d2, &mut rng)?);
        let a = DMatrix::from_fn(pr.len(), ps.len(), |_, _| rng.random_range(-PI..PI));
        let u = two_factor_exp(&pr, &ps, &a)?;
        let mut terms = Vec::new();
        for (r, p) in pr.projectors().iter().enumerate() {
            for (s, q) in ps.projectors().iter().enumerate() {
                terms.push((a[(r, s)], p.operator().kron(q.operator())));
            }
        }
        worst[1] = worst[1].max(u.distance(&matrix_exp_oracle(&generator(terms, d1 * d2)?)?));

        let (d1, d2) = (rng.random_range(2..=4), rng.random_range(2..=4));
        let part = random_partition(d1, &mut rng)?;
        let q = Spectral::new((0..part.len()).map(|_| rng.random_range(-2.0..2.0)).collect(), part)?;
        let r = random_hermitian(d2, &mut rng).scale(c(rng.random_range(0.5..2.0), 0.0));
        let u = tensor_factor_exp(&q, &r)?;
        let oracle = matrix_exp_oracle(&q.operator().kron(&r).scale(c(0.0, 1.0)))?;
        worst[2] = worst[2].max(u.distance(&oracle));
    }
    let detail = format!("{cases} cases");
    Ok(["coarse_grained_exp", "two_factor_exp", "tensor_factor_exp"]
        .iter()
        .zip(worst)
        .map(|(n, w)| CheckReport::at_most(G, *n, w, 1e-12).with_detail(detail.clone()))
        .collect())
}

/// Order-3 truncation error exponent under θ-halving for random
/// anti-Hermitian pairs.
pub fn bch_scaling(pairs: usize, seed: u64) -> Result<Vec<CheckReport>> {
    const G: &str = "bch_scaling";
    let stream = SeedTree::new(seed).child("verify.bch");
    let theta = 0.1;
    let error = |a: &Operator, b: &Operator, t: f64| -> Result<f64> {
        let (ta, tb) = (a.scale(c(t, 0.0)), b.scale(c(t, 0.0)));
        let exact = matrix_exp_oracle(&ta)?.mul(&matrix_exp_oracle(&tb)?)?;
        Ok(exact.distance(&matrix_exp_oracle(&bch_eta_truncated(&ta, &tb, 3)?)?))
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..pairs {
        let mut rng = stream.rng(i as u64);
        let a = random_hermitian(4, &mut rng).scale(c(0.0, 1.0));
        let b = random_hermitian(4, &mut rng).scale(c(0.0, 1.0));
        let p = (error(&a, &b, theta)? / error(&a, &b, theta / 2.0)?).log2();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    let detail = format!("{pairs} pairs, exponents in [{lo:.3}, {hi:.3}]");
    Ok(vec![
        CheckReport::at_least(G, "min_exponent", lo, 3.7).with_detail(detail.clone()),
        CheckReport::at_most(G, "max_exponent", hi, 4.3).with_detail(detail),
    ])
}

/// A pure phase imprint leaves `|ψ|²` unchanged pointwise.
pub fn impulse_invariance(seed: u64) -> Result<Vec<CheckReport>> {
    let grid = GridSpec::line(-64.0, 128.0, 4096)?;
    let packets = [
        PacketParams::new(-20.0, 2.0).with_momentum(1.5).with_weight(c(0.6, 0.0)),
        PacketParams::new(3.0, 1.5).with_momentum(-0.7).with_weight(c(0.0, 0.6)),
        PacketParams::new(25.0, 3.0).with_weight(c(0.52915026221291811, 0.0)),
    ];
    let psi = synthesize_packets(&grid, 1, &packets, Units::default())?;
    let region = Region::intervals(&[-40.0, -8.0, 0.0, 10.0, 40.0], ["a", "b", "c", "d"])?;
    let mut rng = SeedTree::new(seed).child("verify.impulse").rng(0);
    let etas: Vec<f64> = (0..4).map(|_| rng.random_range(-50.0..50.0)).collect();
    let after = apply_piecewise_impulse(&psi, &region, &etas, 0.7, Units::default())?;
    let change = psi.density().iter().zip(after.density()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(vec![CheckReport::at_most("impulse_invariance", "max_density_change", change, 1e-15).with_detail("4096 nodes")])
}

/// `Δ⟨P⟩ = −τ∫∇V|ψ|²` for smooth potentials.
pub fn momentum_kick() -> Result<Vec<CheckReport>> {
    let grid = GridSpec::line(-32.0, 64.0, 1024)?;
    let units = Units::default();
    let psi = synthesize_packets(&grid, 1, &[PacketParams::new(0.5, 1.3).with_momentum(0.7)], units)?;
    let tau = 0.3;
    type Analytic = fn(f64) -> (f64, f64, f64);
    let potentials: [(&str, Analytic); 5] = [
        ("linear", |x| (0.8 * x, 0.8, 0.0)),
        ("harmonic", |x| (0.3 * x * x, 0.6 * x, 0.6)),
        ("sine", |x| ((0.7 * x).sin(), 0.7 * (0.7 * x).cos(), -0.49 * (0.7 * x).sin())),
        ("bump", |x| {
            let g = 2.0 * (-(x - 1.0).powi(2) / 2.0).exp();
            (g, -(x - 1.0) * g, ((x - 1.0).powi(2) - 1.0) * g)
        }),
        ("step", |x| {
            let t = (1.5 * x).tanh();
            let s = 1.0 - t * t;
            (t, 1.5 * s, -4.5 * t * s)
        }),
    ];
    potentials
        .iter()
        .map(|(name, f)| {
            let pot = SmoothPotential::from_fn(&grid, |p| {
                let (v, g, l) = f(p[0]);
                (v, [g, 0.0], l)
            });
            let r = kick_check(&psi, &pot, tau, units)?;
            Ok(CheckReport::at_most("momentum_kick", *name, r.deviation, 1e-6)
                .with_detail(format!("Δp = {:.6}", r.measured[0])))
        })
        .collect()
}

/// Impulse plus free flight against Strang splitting with the box potential.
pub fn impulsive_vs_split_step() -> Result<Vec<CheckReport>> {
    const G: &str = "impulsive_vs_split_step";
    let units = Units::default();
    let grid = GridSpec::line(-32.0, 64.0, 2048)?;
    let region = Region::intervals(&[-12.0, 0.0, 12.0], ["L", "R"])?;
    let pair = synthesize_packets(
        &grid,
        1,
        &[
            PacketParams::new(-6.0, 1.0).with_weight(c(FRAC_1_SQRT_2, 0.0)),
            PacketParams::new(6.0, 1.0).with_weight(c(FRAC_1_SQRT_2, 0.0)),
        ],
        units,
    )?;
    let straddling = synthesize_packets(&grid, 1, &[PacketParams::new(0.0, 1.0)], units)?;
    let steps = 512;
    let mut coincident = 0.0f64;
    let mut control = f64::INFINITY;
    for tau in [0.1, 0.25, 0.5] {
        let etas = vec![PI / tau, 0.0];
        let pot = Potential::Boxes { region: region.clone(), etas: etas.clone() };
        let dt = tau / steps as f64;
        let imp = extended_impulsive_evolve(&pair, &region, &etas, tau, units)?;
        coincident = coincident.max(imp.l2_distance(&split_step_evolve(&pair, &pot, dt, steps, units)?)?);
        let kicked = free_propagate(&apply_piecewise_impulse(&straddling, &region, &etas, tau, units)?, tau, units)?;
        control = control.min(kicked.l2_distance(&split_step_evolve(&straddling, &pot, dt, steps, units)?)?);
    }
    Ok(vec![
        CheckReport::at_most(G, "coincident_6sigma", coincident, 1e-3).with_detail("ητ = π, τ ∈ {0.1, 0.25, 0.5}"),
        CheckReport::at_least(G, "edge_straddling_control", control, 1e-2),
    ])
}

/// Coherent and averaged marginal tables against closed forms.
pub fn epr_checks(angles: usize, seed: u64, exec: Execution) -> Result<Vec<CheckReport>> {
    const G: &str = "epr_tables";
    let zero = epr_tables(0.0)?;
    let before = (zero.coherent[0] - 0.0).abs().max((zero.coherent[1] - 1.0).abs());
    let mut rng = SeedTree::new(seed).child("verify.epr").rng(0);
    let (mut formula, mut oracle, mut local) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..angles {
        let t = epr_tables(rng.random_range(0.0..2.0 * PI))?;
        for s in 0..2 {
            formula = formula.max((t.coherent[s] - t.formula[s]).abs());
            oracle = oracle.max((t.coherent[s] - t.brute_force[s]).abs());
            local = local.max((t.incoherent[s] - 0.5).abs());
        }
    }
    let density = ParamDensity::independent(vec![Marginal::Uniform { lower: 0.0, upper: 2.0 * PI }], Marginal::Fixed {
        value: 0.0,
    });
    let mut period = 0.0f64;
    for s in 0..2 {
        let avg = overbar_average(
            |p| epr_tables(p.etas[0]).map_or(c(f64::NAN, 0.0), |t| c(t.coherent[s], 0.0)),
            &density,
            Method::default(),
            exec,
        )?;
        period = period.max((avg.value.re - 0.5).abs());
    }
    let n = format!("{angles} angles");
    Ok(vec![
        CheckReport::at_most(G, "coherent_before", before, 1e-12),
        CheckReport::at_most(G, "coherent_vs_formula", formula, 1e-12).with_detail(n.clone()),
        CheckReport::at_most(G, "coherent_vs_brute_force", oracle, 1e-12).with_detail(n.clone()),
        CheckReport::at_most(G, "incoherent_is_half", local, 1e-12).with_detail(n),
        CheckReport::at_most(G, "full_period_average", period, 1e-10),
    ])
}

/// Shipped two-slit config, with the averaged screen density also rebuilt by
/// the rectangle rule over one phase period.
pub fn two_slit_visibility(exec: Execution) -> Result<Vec<CheckReport>> {
    const G: &str = "two_slit_visibility";
    let mut cfg = default_config("two_slit")?;
    cfg.execution = exec;
    let r = run_experiment(&cfg)?;
    let units = cfg.units;
    let grid = cfg.grid.clone().expect("grid");
    let region = cfg.regions.clone().expect("regions");
    let tau = cfg.timings.tau.expect("tau");
    let t_loc = cfg.timings.t_loc.unwrap_or(0.0);
    let t_screen = cfg.timings.t_screen.expect("t_screen");

    let psi0 = synthesize_packets(&grid, 1, &cfg.packets, units)?;
    let psi_loc = free_propagate(&psi0, t_loc, units)?;
    // phase differences k·2π/M reproduce the uniform period average exactly
    let m = 8;
    let mut avg = vec![0.0; grid.len()];
    for k in 0..m {
        let etas = [0.0, 2.0 * PI * units.hbar * k as f64 / (m as f64 * tau)];
        let f = extended_impulsive_evolve(&psi_loc, &region, &etas, tau, units)?;
        let f = free_propagate(&f, t_screen - t_loc - tau, units)?;
        for (a, d) in avg.iter_mut().zip(f.density()) {
            *a += d / m as f64;
        }
    }
    let mut incoherent = vec![0.0; grid.len()];
    for p in &cfg.packets {
        let b = free_propagate(&synthesize_packets(&grid, 1, std::slice::from_ref(p), units)?, t_screen, units)?;
        let w = p.weight.norm_sqr();
        for (s, d) in incoherent.iter_mut().zip(b.density()) {
            *s += w * d;
        }
    }
    let dev = avg.iter().zip(&incoherent).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let center = 0.5 * (cfg.packets[0].center[0] + cfg.packets[1].center[0]);
    let half = r.scalar("window_half_width").unwrap_or(0.0);
    let vis = fringe_visibility(&grid, &avg, center, half);
    let get = |k: &str| r.visibility.get(k).copied().unwrap_or(f64::NAN);
    Ok(vec![
        CheckReport::at_most(G, "averaged_vs_incoherent", r.scalar("averaged_minus_incoherent").unwrap_or(f64::NAN), 1e-3),
        CheckReport::at_most(G, "period_samples_vs_incoherent", dev, 1e-3).with_detail(format!("{m} phase samples")),
        CheckReport::at_most(G, "averaged_visibility", get("averaged"), 0.05),
        CheckReport::at_most(G, "period_samples_visibility", vis, 0.05),
        CheckReport::at_least(G, "control_visibility", get("control"), 0.9),
    ])
}

/// Two packets crossing each other with one coincident impulse in between.
pub fn equivariance(count: usize, seed: u64, exec: Execution) -> Result<Vec<CheckReport>> {
    const G: &str = "equivariance";
    let units = Units::default();
    let grid = GridSpec::line(-32.0, 64.0, 1024)?;
    let psi0 = synthesize_packets(
        &grid,
        1,
        &[
            PacketParams::new(-8.0, 1.0).with_momentum(2.0).with_weight(c(FRAC_1_SQRT_2, 0.0)),
            PacketParams::new(8.0, 1.0).with_momentum(-2.0).with_weight(c(FRAC_1_SQRT_2, 0.0)),
        ],
        units,
    )?;
    let region = Region::intervals(&[-24.0, 0.0, 24.0], ["L", "R"])?;
    let (t_imp, tau, t_end) = (0.5, 0.5, 6.0);
    let coincident = coincidence_report(&free_propagate(&psi0, t_imp, units)?, &region)?;
    let history = Timeline::new(psi0.clone(), units).with_event(t_imp, Event::Impulse {
        region,
        etas: vec![1.3, 4.1],
        tau,
    })?;
    let starts = sample_quantum_equilibrium(&psi0, &EnsembleSpec::new(count, seed), exec)?;
    let opts = IntegrationOptions { execution: exec, units, ..IntegrationOptions::default() };
    let run = integrate_ensemble(&history, &starts, 0.0, t_end, &opts)?;
    let finals = run.positions_at(t_end);
    let ks = equivariance_distance(&history.field_at(t_end, Side::After)?, &finals);
    let crit = ks_critical_1pct(finals.len());
    let flagged = run.flagged as f64 / count as f64;
    Ok(vec![
        CheckReport::at_least(G, "impulse_coincident", if coincident.pass { 1.0 } else { 0.0 }, 1.0)
            .with_detail(coincident.summary()),
        CheckReport::at_most(G, "ks_distance", ks, crit).with_detail(format!("N = {count}, t = {t_end}")),
        CheckReport::at_most(G, "flagged_fraction", flagged, 1e-3),
    ])
}

/// Detector frequencies of the shipped spin-½ and spin-1 configs.
pub fn stern_gerlach_statistics(exec: Execution) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    for name in ["stern_gerlach_half", "stern_gerlach_one"] {
        let mut cfg = default_config(name)?;
        cfg.execution = exec;
        let r = run_experiment(&cfg)?;
        let n = r.equivariance.as_ref().map_or(0, |e| e.samples);
        for ch in r.checks.iter().filter(|c| c.name.starts_with("frequency:")) {
            let label = &ch.name["frequency:".len()..];
            let detail = format!("{} of {n}, p = {:.4}", r.counts.get(label).copied().unwrap_or(0), r.probabilities[label]);
            out.push(
                CheckReport::at_most("stern_gerlach_statistics", format!("{name}:{label}"), ch.value, ch.threshold)
                    .with_detail(detail),
            );
        }
        if let Some(e) = &r.equivariance {
            out.push(CheckReport::at_most("stern_gerlach_statistics", format!("{name}:ks"), e.ks_distance, e.critical_value));
        }
    }
    Ok(out)
}

/// Pointer overlaps against direct quadrature, Gaussian-marginal averages
/// against their closed form, and suppression in the quasi-classical regime.
pub fn decoherence_checks(seed: u64, exec: Execution) -> Result<Vec<CheckReport>> {
    const G: &str = "decoherence_matrix";
    let mut rng = SeedTree::new(seed).child("verify.decoherence").rng(0);
    let gl = GaussLegendre::new(64);
    let mut overlap = 0.0f64;
    for _ in 0..20 {
        let model = PointerModel::new(rng.random_range(0.3..2.0), rng.random_range(0.0..30.0))?;
        let (ek, ekp, tau): (f64, f64, f64) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(0.1..1.0));
        let w = model.width;
        let (a, b) = ((ek * tau).min(ekp * tau) - 16.0 * w, (ek * tau).max(ekp * tau) + 16.0 * w);
        let panels = ((b - a) * (model.k0 + 1.0 / w) / 2.0).ceil() as usize + 4;
        let f = |y: f64| model.amplitude(y - ek * tau) * model.amplitude(y - ekp * tau).conj();
        let q = c(gl.integrate(a, b, panels, |y| f(y).re), gl.integrate(a, b, panels, |y| f(y).im));
        overlap = overlap.max((q - pointer_overlap(&model, ek, ekp, tau)).norm());
    }

    // Δ = η₀ − η₁ ~ N(m, v): E[e^{-αΔ²} e^{-ik₀τΔ}] in closed form
    let mut gaussian = 0.0f64;
    for _ in 0..5 {
        let model = PointerModel::new(rng.random_range(0.5..1.5), rng.random_range(0.0..5.0))?;
        let tau = rng.random_range(0.2..1.0);
        let (m0, s0, m1, s1) =
            (rng.random_range(-2.0..2.0), rng.random_range(0.2..1.5), rng.random_range(-2.0..2.0), rng.random_range(0.2..1.5));
        let d = ParamDensity::independent(
            vec![Marginal::Gaussian { mean: m0, std: s0 }, Marginal::Gaussian { mean: m1, std: s1 }],
            Marginal::Fixed { value: 0.0 },
        );
        let got = decoherence_matrix(&model, &d, tau, Method::default(), exec)?.get(0, 1);
        let (mean, var) = (m0 - m1, s0 * s0 + s1 * s1);
        let alpha = tau * tau / (8.0 * model.width * model.width);
        let t = c(0.0, -model.k0 * tau);
        let den = 1.0 + 2.0 * alpha * var;
        let expected = den.powf(-0.5) * ((-alpha * mean * mean + t * mean + t * t * var / 2.0) / den).exp();
        gaussian = gaussian.max((got - expected).norm());
    }

    let tau = 0.5;
    let period = Marginal::Uniform { lower: 0.0, upper: 2.0 * PI / tau };
    let wide = ParamDensity::independent(vec![period; 3], Marginal::Uniform { lower: -0.5, upper: 0.5 });
    let model = PointerModel::new(1.0, 20.0)?;
    let suppressed = decoherence_matrix(&model, &wide, tau, Method::default(), exec)?.max_off_diagonal();
    Ok(vec![
        CheckReport::at_most(G, "pointer_overlap_closed_form", overlap, 1e-8).with_detail("20 parameter sets"),
        CheckReport::at_most(G, "gaussian_marginal_closed_form", gaussian, 1e-8).with_detail("5 parameter sets"),
        CheckReport::at_most(G, "quasi_classical_off_diagonal", suppressed, 1e-2).with_detail("k₀w = 20, full-period η"),
    ])
}

/// Two runs of every shipped config (trajectory counts reduced) emit
/// identical bytes, also across execution modes.
pub fn determinism(exec: Execution) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    for (name, _) in DEFAULT_CONFIGS {
        let mut cfg = default_config(name)?;
        if let Some(e) = cfg.ensemble.as_mut() {
            e.count = e.count.min(500);
        }
        let render = |exec: Execution| -> Result<Vec<(String, Vec<u8>)>> {
            let mut cfg = cfg.clone();
            cfg.execution = exec;
            let r = run_experiment(&cfg)?;
            Ok(r.outputs(&cfg).files().map(|(n, b)| (n.to_string(), b.to_vec())).collect())
        };
        let first = render(exec)?;
        // the resolved config echoes the execution mode
        let results = |files: &[(String, Vec<u8>)]| -> Vec<(String, Vec<u8>)> {
            files.iter().filter(|(n, _)| n != "config.resolved.json").cloned().collect()
        };
        let same = first == render(exec)? && results(&first) == results(&render(Execution::Sequential)?);
        out.push(CheckReport::at_least("determinism", name, if same { 1.0 } else { 0.0 }, 1.0).with_detail(format!(
            "{} files",
            first.len()
        )));
    }
    Ok(out)
}
