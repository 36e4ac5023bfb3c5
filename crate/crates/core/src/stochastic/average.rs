use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ParamDensity, StochasticParams};
use crate::par::{map_range, Execution};
use crate::quadrature::GaussLegendre;
use crate::rng::SeedTree;
use crate::{Error, Result};

/// Nodes per dimension of the tensor-product rule.
pub const QUADRATURE_NODES: usize = 64;
/// Largest number of random axes handled by quadrature.
pub const MAX_QUADRATURE_DIMS: usize = 3;

/// How the overbar average is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Method {
    /// Tensor-product Gauss–Legendre, `panels` sub-intervals per axis.
    Quadrature {
        #[serde(default = "one")]
        panels: usize,
    },
    /// `samples` draws from substream `"stochastic"` of `seed`.
    MonteCarlo { samples: usize, seed: u64 },
}

fn one() -> usize {
    1
}

impl Default for Method {
    fn default() -> Self {
        Method::Quadrature { panels: 1 }
    }
}

/// Result of an overbar average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Average {
    pub value: Complex64,
    /// Zero for quadrature.
    pub std_error: f64,
    pub evaluations: usize,
}

/// `ū = ∫ u(η, y) π(η, y) dη dy / ∫ π(η, y) dη dy`.
pub fn overbar_average<F>(u: F, density: &ParamDensity, method: Method, exec: Execution) -> Result<Average>
where
    F: Fn(&StochasticParams) -> Complex64 + Sync + Send,
{
    density.validate()?;
    match method {
        Method::Quadrature { panels } => quadrature(&u, density, panels.max(1), exec),
        Method::MonteCarlo { samples, seed } => monte_carlo(&u, density, samples, seed, exec),
    }
}

fn quadrature<F>(u: &F, density: &ParamDensity, panels: usize, exec: Execution) -> Result<Average>
where
    F: Fn(&StochasticParams) -> Complex64 + Sync + Send,
{
    let axes = density.axes();
    if axes.len() > MAX_QUADRATURE_DIMS {
        return Err(Error::TooManyDimensions(axes.len()));
    }
    let gl = GaussLegendre::new(QUADRATURE_NODES);
    let rules: Vec<(Vec<f64>, Vec<f64>)> = axes.iter().map(|(m, _)| m.nodes(&gl, panels)).collect();
    let base = density.base_params();
    let outer = rules.first().map_or(1, |r| r.0.len());
    let inner: usize = rules.iter().skip(1).map(|r| r.0.len()).product();
    let partials = map_range(exec, outer, |i| {
        let mut p = base.clone();
        let mut w0 = 1.0;
        if let Some((xs, ws)) = rules.first() {
            p.set(axes[0].1, xs[i]);
            w0 = ws[i];
        }
        let mut sum = Complex64::new(0.0, 0.0);
        let mut norm = 0.0;
        let mut finite = true;
        for j in 0..inner {
            let mut w = w0;
            let mut rem = j;
            for (a, (xs, ws)) in rules.iter().enumerate().skip(1).rev() {
                let k = rem % xs.len();
                rem /= xs.len();
                p.set(axes[a].1, xs[k]);
                w *= ws[k];
            }
            let v = u(&p);
            finite &= v.re.is_finite() && v.im.is_finite();
            sum += v * w;
            norm += w;
        }
        (sum, norm, finite)
    });
    let mut sum = Complex64::new(0.0, 0.0);
    let mut norm = 0.0;
    for (s, n, finite) in partials {
        if !finite {
            return Err(Error::NonIntegrable);
        }
        sum += s;
        norm += n;
    }
    if !(norm > 0.0) {
        return Err(Error::InvalidDensity("density integrates to zero".into()));
    }
    Ok(Average { value: sum / norm, std_error: 0.0, evaluations: outer * inner })
}

fn monte_carlo<F>(u: &F, density: &ParamDensity, samples: usize, seed: u64, exec: Execution) -> Result<Average>
where
    F: Fn(&StochasticParams) -> Complex64 + Sync + Send,
{
    if samples < 2 {
        return Err(Error::InvalidDensity("Monte Carlo needs at least 2 samples".into()));
    }
    let tree = SeedTree::new(seed).child("stochastic");
    let values = map_range(exec, samples, |i| u(&density.sample(&mut tree.rng(i as u64))));
    if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonIntegrable);
    }
    let n = samples as f64;
    let mean = values.iter().sum::<Complex64>() / n;
    let var = values.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (n - 1.0);
    Ok(Average { value: mean, std_error: (var / n).sqrt(), evaluations: samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::Marginal;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn constant_is_reproduced() {
        let d = ParamDensity::independent(
            vec![Marginal::Uniform { lower: -1.0, upper: 2.0 }, Marginal::Gaussian { mean: 0.3, std: 0.2 }],
            Marginal::Uniform { lower: 0.0, upper: 1.0 },
        );
        let a = overbar_average(|_| Complex64::new(0.7, -0.2), &d, Method::default(), Execution::Parallel).unwrap();
        assert!((a.value - Complex64::new(0.7, -0.2)).norm() < 1e-14);
        assert_eq!(a.evaluations, 64 * 64 * 64);
    }

    #[test]
    fn full_period_phase_vanishes() {
        let tau = 0.37;
        let d = ParamDensity::independent(vec![Marginal::Uniform { lower: 0.0, upper: 2.0 * PI / tau }], Marginal::Fixed { value: 0.0 });
        let a = overbar_average(|p| Complex64::from_polar(1.0, p.etas[0] * tau), &d, Method::default(), Execution::Sequential).unwrap();
        assert!(a.value.norm() < 1e-10);
    }

    #[test]
    fn gaussian_characteristic_function() {
        let (s, tau) = (1.3, 0.8);
        let d = ParamDensity::independent(vec![Marginal::Gaussian { mean: 0.0, std: s }], Marginal::Fixed { value: 0.0 });
        let a = overbar_average(|p| c((p.etas[0] * tau).cos()), &d, Method::default(), Execution::Parallel).unwrap();
        assert!((a.value.re - (-s * s * tau * tau / 2.0).exp()).abs() < 1e-8);
    }

    #[test]
    fn linear_in_integrand() {
        let d = ParamDensity::independent(vec![Marginal::Uniform { lower: -1.0, upper: 1.0 }], Marginal::Gaussian { mean: 0.0, std: 1.0 });
        let f = |p: &StochasticParams| c(p.etas[0].powi(2));
        let g = |p: &StochasticParams| Complex64::new(0.0, p.y.sin() + p.y * p.y);
        let m = Method::default();
        let lhs = overbar_average(|p| f(p) * 2.0 + g(p) * 3.0, &d, m, Execution::Parallel).unwrap().value;
        let rhs = overbar_average(f, &d, m, Execution::Parallel).unwrap().value * 2.0
            + overbar_average(g, &d, m, Execution::Parallel).unwrap().value * 3.0;
        assert!((lhs - rhs).norm() < 1e-13);
        assert!((overbar_average(f, &d, m, Execution::Parallel).unwrap().value.re - 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn monte_carlo_is_seeded_and_within_error() {
        let d = ParamDensity::independent(vec![Marginal::Gaussian { mean: 0.0, std: 1.0 }], Marginal::Fixed { value: 0.0 });
        let m = Method::MonteCarlo { samples: 20_000, seed: 5 };
        let a = overbar_average(|p| c(p.etas[0].cos()), &d, m, Execution::Parallel).unwrap();
        let b = overbar_average(|p| c(p.etas[0].cos()), &d, m, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert!(a.std_error > 0.0);
        assert!((a.value.re - (-0.5f64).exp()).abs() < 4.0 * a.std_error);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m4 = vec![Marginal::Uniform { lower: 0.0, upper: 1.0 }; 4];
        let d = ParamDensity::independent(m4, Marginal::Fixed { value: 0.0 });
        assert_eq!(overbar_average(|_| c(1.0), &d, Method::default(), Execution::Parallel), Err(Error::TooManyDimensions(4)));
        let d = ParamDensity::independent(vec![Marginal::Uniform { lower: 0.0, upper: 1.0 }], Marginal::Fixed { value: 0.0 });
        assert_eq!(
            overbar_average(|p| c(1.0 / (p.etas[0] - p.etas[0])), &d, Method::default(), Execution::Parallel),
            Err(Error::NonIntegrable)
        );
    }
}
