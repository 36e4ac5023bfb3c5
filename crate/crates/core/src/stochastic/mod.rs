//! Quantum stochastic parameters: the pointer model, the overbar average over
//! `(η₁…ηₙ, y)`, and the pointer-overlap decoherence matrix.

mod average;
mod decoherence;

pub use average::{overbar_average, Average, Method};
pub use decoherence::{
    averaged_density, averaged_density_pointer, decoherence_matrix, phase_average_matrix, CoherenceMatrix,
};

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

/// Gaussian marginals are integrated over `mean ± GAUSSIAN_SPAN·std`.
pub(crate) const GAUSSIAN_SPAN: f64 = 10.0;

/// Gaussian pointer `Φ₀(y) = (2πw²)^{-1/4} e^{-y²/4w²} e^{ik₀y}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointerModel {
    pub width: f64,
    #[serde(default)]
    pub k0: f64,
}

impl PointerModel {
    pub fn new(width: f64, k0: f64) -> Result<Self> {
        let m = Self { width, k0 };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width.is_finite() && self.width > 0.0) || !self.k0.is_finite() {
            return Err(Error::InvalidDensity(format!("pointer width {} must be positive", self.width)));
        }
        Ok(())
    }

    pub fn amplitude(&self, y: f64) -> Complex64 {
        let w = self.width;
        Complex64::from_polar((2.0 * PI * w * w).powf(-0.25) * (-y * y / (4.0 * w * w)).exp(), self.k0 * y)
    }

    /// `k₀w ≥ 20`.
    pub fn is_quasi_classical(&self) -> bool {
        self.k0.abs() * self.width >= 20.0
    }
}

/// `∫dy Φ₀(y−η_kτ) Φ₀*(y−η_k'τ) = e^{-(Δτ)²/8w²} e^{-ik₀Δτ}` with `Δ = η_k − η_k'`.
pub fn pointer_overlap(model: &PointerModel, eta_k: f64, eta_kp: f64, tau: f64) -> Complex64 {
    let d = (eta_k - eta_kp) * tau;
    let w = model.width;
    Complex64::from_polar((-d * d / (8.0 * w * w)).exp(), -model.k0 * d)
}

/// Marginal density of one stochastic parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Marginal {
    Uniform { lower: f64, upper: f64 },
    Gaussian { mean: f64, std: f64 },
    Fixed { value: f64 },
}

impl Marginal {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Marginal::Uniform { lower, upper } => lower.is_finite() && upper.is_finite() && lower < upper,
            Marginal::Gaussian { mean, std } => mean.is_finite() && std.is_finite() && std > 0.0,
            Marginal::Fixed { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDensity(format!("{self:?}")))
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, Marginal::Fixed { .. })
    }

    /// Integration interval (`[value, value]` for a fixed parameter).
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Marginal::Uniform { lower, upper } => (lower, upper),
            Marginal::Gaussian { mean, std } => (mean - GAUSSIAN_SPAN * std, mean + GAUSSIAN_SPAN * std),
            Marginal::Fixed { value } => (value, value),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Uniform { lower, upper } => {
                if (lower..=upper).contains(&x) {
                    1.0 / (upper - lower)
                } else {
                    0.0
                }
            }
            Marginal::Gaussian { mean, std } => {
                let z = (x - mean) / std;
                (-0.5 * z * z).exp() / (std * (2.0 * PI).sqrt())
            }
            Marginal::Fixed { .. } => 1.0,
        }
    }

    /// Quadrature nodes and density-weighted weights over the support.
    pub(crate) fn nodes(&self, gl: &GaussLegendre, panels: usize) -> (Vec<f64>, Vec<f64>) {
        match *self {
            Marginal::Fixed { value } => (vec![value], vec![1.0]),
            _ => {
                let (a, b) = self.support();
                let (xs, ws) = gl.composite(a, b, panels);
                let ws = xs.iter().zip(ws).map(|(&x, w)| w * self.pdf(x)).collect();
                (xs, ws)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Uniform { lower, upper } => lower + (upper - lower) * rng.random::<f64>(),
            Marginal::Gaussian { mean, std } => Normal::new(mean, std).expect("validated std").sample(rng),
            Marginal::Fixed { value } => value,
        }
    }
}

/// `π(η₁…ηₙ, y)` as a product of marginals, or with all `η` sharing a
/// single draw from the first marginal when `independent` is false.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamDensity {
    pub etas: Vec<Marginal>,
    pub y: Marginal,
    #[serde(default = "yes")]
    pub independent: bool,
}

fn yes() -> bool {
    true
}

impl ParamDensity {
    pub fn independent(etas: Vec<Marginal>, y: Marginal) -> Self {
        Self { etas, y, independent: true }
    }

    /// All `η_k` equal to one draw from `eta`.
    pub fn common(count: usize, eta: Marginal, y: Marginal) -> Self {
        Self { etas: vec![eta; count], y, independent: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.etas.is_empty() {
            return Err(Error::InvalidDensity("no η marginals".into()));
        }
        for m in self.etas.iter().chain(std::iter::once(&self.y)) {
            m.validate()?;
        }
        if !self.independent && self.etas.iter().any(|m| m != &self.etas[0]) {
            return Err(Error::InvalidDensity("shared-draw densities need identical η marginals".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.etas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.etas.is_empty()
    }

    /// Random axes of the joint density: `(marginal, role)`.
    pub(crate) fn axes(&self) -> Vec<(Marginal, Role)> {
        let mut axes = Vec::new();
        if self.independent {
            for (k, m) in self.etas.iter().enumerate() {
                if !m.is_fixed() {
                    axes.push((*m, Role::Eta(k)));
                }
            }
        } else if !self.etas[0].is_fixed() {
            axes.push((self.etas[0], Role::AllEtas));
        }
        if !self.y.is_fixed() {
            axes.push((self.y, Role::Y));
        }
        axes
    }

    /// Parameters with every random axis at its first coordinate.
    pub(crate) fn base_params(&self) -> StochasticParams {
        let fixed = |m: &Marginal| match *m {
            Marginal::Fixed { value } => value,
            _ => f64::NAN,
        };
        StochasticParams { etas: self.etas.iter().map(fixed).collect(), y: fixed(&self.y) }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> StochasticParams {
        let etas = if self.independent {
            self.etas.iter().map(|m| m.sample(rng)).collect()
        } else {
            vec![self.etas[0].sample(rng); self.etas.len()]
        };
        StochasticParams { etas, y: self.y.sample(rng) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Role {
    Eta(usize),
    AllEtas,
    Y,
}

/// One draw `(η₁…ηₙ, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticParams {
    pub etas: Vec<f64>,
    pub y: f64,
}

impl StochasticParams {
    pub(crate) fn set(&mut self, role: Role, value: f64) {
        match role {
            Role::Eta(k) => self.etas[k] = value,
            Role::AllEtas => self.etas.iter_mut().for_each(|e| *e = value),
            Role::Y => self.y = value,
        }
    }
}

/// Apparatus state `|Φ⊥⟩ + Σ a_q|A_q⟩`, with the neutral component modelled
/// as the pointer displaced by `neutral_offset`, far beyond every `η_qτ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsoluteStandard {
    pub pointer: PointerModel,
    pub neutral_offset: f64,
}

impl AbsoluteStandard {
    /// `max_q |⟨Φ⊥|A_q⟩|` with `A_q = Φ₀(y − η_qτ)`.
    pub fn orthogonality_defect(&self, etas: &[f64], tau: f64) -> f64 {
        etas.iter()
            .map(|&eta| pointer_overlap(&self.pointer, self.neutral_offset / tau, eta, tau).norm())
            .fold(0.0, f64::max)
    }
}
