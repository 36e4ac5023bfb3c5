use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::average::QUADRATURE_NODES;
use super::{Marginal, Method, ParamDensity, PointerModel, GAUSSIAN_SPAN};
use crate::grid_field::WaveField;
use crate::par::{map_range, Execution};
use crate::quadrature::GaussLegendre;
use crate::rng::SeedTree;
use crate::{Error, Result};

/// Largest panel count used for the pointer-overlap quadrature.
const MAX_PANELS: usize = 20_000;
/// Oscillation periods allowed per quadrature panel.
const PERIODS_PER_PANEL: f64 = 4.0;

/// Hermitian branch-coherence matrix `M_kk'` weighting cross-branch terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceMatrix {
    pub entries: Vec<Vec<Complex64>>,
    /// Monte Carlo standard error (largest over entries), zero otherwise.
    #[serde(default)]
    pub std_error: f64,
}

impl CoherenceMatrix {
    pub fn new(entries: Vec<Vec<Complex64>>) -> Result<Self> {
        let n = entries.len();
        if let Some(row) = entries.iter().find(|r| r.len() != n) {
            return Err(Error::LengthMismatch { what: "coherence matrix row", expected: n, found: row.len() });
        }
        Ok(Self { entries, std_error: 0.0 })
    }

    pub fn ones(n: usize) -> Self {
        Self { entries: vec![vec![Complex64::new(1.0, 0.0); n]; n], std_error: 0.0 }
    }

    /// `δ_kk'`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self { entries: vec![vec![Complex64::new(0.0, 0.0); n]; n], std_error: 0.0 };
        (0..n).for_each(|k| m.entries[k][k] = Complex64::new(1.0, 0.0));
        m
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, k: usize, kp: usize) -> Complex64 {
        self.entries[k][kp]
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let mut best = 0.0f64;
        for (k, row) in self.entries.iter().enumerate() {
            for (kp, v) in row.iter().enumerate() {
                if k != kp {
                    best = best.max(v.norm());
                }
            }
        }
        best
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (k, row) in self.entries.iter().enumerate() {
            for (kp, v) in row.iter().enumerate() {
                worst = worst.max((v - self.entries[kp][k].conj()).norm());
            }
        }
        worst
    }
}

/// `E[e^{itη}]`.
pub(crate) fn characteristic(m: &Marginal, t: f64) -> Complex64 {
    match *m {
        Marginal::Uniform { lower, upper } => {
            let half = 0.5 * t * (upper - lower);
            let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
            Complex64::from_polar(sinc, 0.5 * t * (upper + lower))
        }
        Marginal::Gaussian { mean, std } => Complex64::from_polar((-0.5 * std * std * t * t).exp(), t * mean),
        Marginal::Fixed { value } => Complex64::from_polar(1.0, t * value),
    }
}

/// Length scale of a marginal controlling how fast its characteristic function varies.
fn spread(m: &Marginal) -> (f64, f64) {
    match *m {
        Marginal::Uniform { lower, upper } => (0.5 * (lower + upper), upper - lower),
        Marginal::Gaussian { mean, std } => (mean, 2.0 * GAUSSIAN_SPAN * std),
        Marginal::Fixed { value } => (value, 0.0),
    }
}

/// Averaged pointer overlaps `D_kk' = E[∫dy Φ₀(y−η_kτ)Φ₀*(y−η_k'τ)]`.
///
/// The pointer offset `y` drops out by translation invariance. With
/// quadrature the Gaussian envelope is written as `E_q[e^{iqΔ}]`,
/// `q ~ N(0, τ²/4w²)`, which turns each pair into a one-dimensional
/// integral over products of the marginals' characteristic functions.
pub fn decoherence_matrix(
    model: &PointerModel,
    density: &ParamDensity,
    tau: f64,
    method: Method,
    exec: Execution,
) -> Result<CoherenceMatrix> {
    model.validate()?;
    density.validate()?;
    let n = density.len();
    if !density.independent || tau == 0.0 {
        return Ok(CoherenceMatrix::ones(n));
    }
    match method {
        Method::Quadrature { panels } => {
            let gl = GaussLegendre::new(QUADRATURE_NODES);
            let sigma_q = tau.abs() / (2.0 * model.width);
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|k| (k + 1..n).map(move |kp| (k, kp))).collect();
            let values = map_range(exec, pairs.len(), |i| {
                let (k, kp) = pairs[i];
                let (mk, mkp) = (&density.etas[k], &density.etas[kp]);
                let ((c1, l1), (c2, l2)) = (spread(mk), spread(mkp));
                let scale = (c1 - c2).abs() + l1 + l2;
                let span = 2.0 * GAUSSIAN_SPAN * sigma_q;
                let needed = (span * scale / (2.0 * std::f64::consts::PI) / PERIODS_PER_PANEL).ceil() as usize;
                let panels = needed.clamp(panels.max(1), MAX_PANELS);
                let (qs, ws) = gl.composite(-GAUSSIAN_SPAN * sigma_q, GAUSSIAN_SPAN * sigma_q, panels);
                let mut sum = Complex64::new(0.0, 0.0);
                let mut norm = 0.0;
                for (&q, &w) in qs.iter().zip(&ws) {
                    let g = w * (-0.5 * (q / sigma_q).powi(2)).exp();
                    let t = q - model.k0 * tau;
                    sum += characteristic(mk, t) * characteristic(mkp, t).conj() * g;
                    norm += g;
                }
                sum / norm
            });
            let mut m = CoherenceMatrix::identity(n);
            for (&(k, kp), v) in pairs.iter().zip(values) {
                m.entries[k][kp] = v;
                m.entries[kp][k] = v.conj();
            }
            Ok(m)
        }
        Method::MonteCarlo { samples, seed } => {
            let tree = SeedTree::new(seed).child("stochastic");
            monte_carlo_matrix(n, samples, exec, |i| {
                let p = density.sample(&mut tree.rng(i as u64));
                move |k, kp| super::pointer_overlap(model, p.etas[k], p.etas[kp], tau)
            })
        }
    }
}

/// Averaged impulse phases `M_kk' = E[e^{-iτ(η_k−η_k')/ħ}]`.
pub fn phase_average_matrix(
    density: &ParamDensity,
    tau: f64,
    hbar: f64,
    method: Method,
    exec: Execution,
) -> Result<CoherenceMatrix> {
    density.validate()?;
    let n = density.len();
    if !density.independent {
        return Ok(CoherenceMatrix::ones(n));
    }
    let t = -tau / hbar;
    match method {
        Method::Quadrature { .. } => {
            let phi: Vec<Complex64> = density.etas.iter().map(|m| characteristic(m, t)).collect();
            let mut m = CoherenceMatrix::identity(n);
            for k in 0..n {
                for kp in 0..n {
                    if k != kp {
                        m.entries[k][kp] = phi[k] * phi[kp].conj();
                    }
                }
            }
            Ok(m)
        }
        Method::MonteCarlo { samples, seed } => {
            let tree = SeedTree::new(seed).child("stochastic");
            monte_carlo_matrix(n, samples, exec, |i| {
                let p = density.sample(&mut tree.rng(i as u64));
                move |k, kp| Complex64::from_polar(1.0, t * (p.etas[k] - p.etas[kp]))
            })
        }
    }
}

fn monte_carlo_matrix<S, G>(n: usize, samples: usize, exec: Execution, draw: S) -> Result<CoherenceMatrix>
where
    S: Fn(usize) -> G + Sync + Send,
    G: Fn(usize, usize) -> Complex64,
{
    if samples < 2 {
        return Err(Error::InvalidDensity("Monte Carlo needs at least 2 samples".into()));
    }
    let draws = map_range(exec, samples, |i| {
        let f = draw(i);
        (0..n * n).map(|j| f(j / n, j % n)).collect::<Vec<_>>()
    });
    let s = samples as f64;
    let mut m = CoherenceMatrix::identity(n);
    let mut worst = 0.0f64;
    for j in 0..n * n {
        let (k, kp) = (j / n, j % n);
        if k == kp {
            continue;
        }
        let mean = draws.iter().map(|d| d[j]).sum::<Complex64>() / s;
        let var = draws.iter().map(|d| (d[j] - mean).norm_sqr()).sum::<f64>() / (s - 1.0);
        m.entries[k][kp] = mean;
        worst = worst.max((var / s).sqrt());
    }
    m.std_error = worst;
    Ok(m)
}

/// `ρ = Σ_kk' M_kk' Φ_k Φ_k'*` with `Φ_k = Σ_λ c_kλ ψ_kλ`, summed over spin.
///
/// With `M = δ_kk'` only intra-branch (λ) interference survives; with the
/// all-ones matrix the result is the fully coherent density.
pub fn averaged_density(
    coeffs: &[Vec<Complex64>],
    branches: &[Vec<WaveField>],
    coherence: &CoherenceMatrix,
) -> Result<Vec<f64>> {
    if coeffs.len() != branches.len() {
        return Err(Error::LengthMismatch { what: "branch coefficients", expected: branches.len(), found: coeffs.len() });
    }
    if coherence.len() != branches.len() {
        return Err(Error::LengthMismatch { what: "coherence matrix", expected: branches.len(), found: coherence.len() });
    }
    let total: f64 = coeffs.iter().flatten().map(|c| c.norm_sqr()).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Invariant { name: "normalized coefficients", message: format!("Σ|c|² = {total}") });
    }
    let first = branches.iter().flatten().next().ok_or(Error::EmptyBasis)?;
    let mut phis = Vec::with_capacity(branches.len());
    for (cs, fields) in coeffs.iter().zip(branches) {
        if cs.len() != fields.len() {
            return Err(Error::LengthMismatch { what: "branch fields", expected: cs.len(), found: fields.len() });
        }
        let mut phi = WaveField::zeros(first.grid().clone(), first.spin_dim());
        for (c, f) in cs.iter().zip(fields) {
            first.check_compatible(f)?;
            phi = phi.add(&f.clone().scaled(*c))?;
        }
        phis.push(phi);
    }
    let amps: Vec<&[Complex64]> = phis.iter().map(|p| p.amplitudes()).collect();
    let n = first.grid().len();
    let s = first.spin_dim();
    Ok((0..n)
        .map(|i| {
            let mut rho = 0.0;
            for c in 0..s {
                let idx = c * n + i;
                for (k, a) in amps.iter().enumerate() {
                    for (kp, b) in amps.iter().enumerate() {
                        rho += (coherence.get(k, kp) * a[idx] * b[idx].conj()).re;
                    }
                }
            }
            rho
        })
        .collect())
}

/// [`averaged_density`] weighted by the pointer [`decoherence_matrix`].
pub fn averaged_density_pointer(
    coeffs: &[Vec<Complex64>],
    branches: &[Vec<WaveField>],
    model: &PointerModel,
    density: &ParamDensity,
    tau: f64,
    method: Method,
    exec: Execution,
) -> Result<Vec<f64>> {
    let m = decoherence_matrix(model, density, tau, method, exec)?;
    averaged_density(coeffs, branches, &m)
}
