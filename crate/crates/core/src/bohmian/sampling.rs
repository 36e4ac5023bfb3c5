use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::grid_field::{Point, WaveField};
use crate::par::{map_range, Execution};
use crate::rng::SeedTree;
use crate::{Error, Result};

/// Size, seed and node threshold of a trajectory ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub count: usize,
    pub seed: u64,
    #[serde(default = "default_node_epsilon")]
    pub node_epsilon: f64,
}

pub(crate) fn default_node_epsilon() -> f64 {
    1e-8
}

impl EnsembleSpec {
    pub fn new(count: usize, seed: u64) -> Self {
        Self { count, seed, node_epsilon: default_node_epsilon() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidEnsemble("count must be at least 1".into()));
        }
        if !(self.node_epsilon > 0.0 && self.node_epsilon < 1.0) {
            return Err(Error::InvalidEnsemble(format!("node_epsilon {} outside (0, 1)", self.node_epsilon)));
        }
        Ok(())
    }
}

/// Cumulative distribution of `|ψ|²` with the density held constant on each
/// grid cell `[xᵢ − dx/2, xᵢ + dx/2)`.
pub(crate) struct CellCdf {
    cumulative: Vec<f64>,
}

impl CellCdf {
    pub(crate) fn new(weights: &[f64]) -> Result<Self> {
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(weights.len());
        for w in weights {
            acc += w;
            cumulative.push(acc);
        }
        if !(acc > 0.0) || !acc.is_finite() {
            return Err(Error::DegenerateDensity);
        }
        cumulative.iter_mut().for_each(|c| *c /= acc);
        Ok(Self { cumulative })
    }

    /// Cell index and fractional position inside it for a uniform `u`.
    pub(crate) fn invert(&self, u: f64) -> (usize, f64) {
        let i = self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1);
        let lo = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
        let width = self.cumulative[i] - lo;
        let frac = if width > 0.0 { ((u - lo) / width).clamp(0.0, 1.0 - f64::EPSILON) } else { 0.5 };
        (i, frac)
    }

    /// CDF at position `s` measured in cells from the left edge of cell 0.
    pub(crate) fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let i = s.floor() as usize;
        if i >= self.cumulative.len() {
            return 1.0;
        }
        let lo = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
        lo + (self.cumulative[i] - lo) * (s - i as f64)
    }
}

/// `N` i.i.d. positions distributed as `|ψ|²` (summed over spin).
///
/// Cells are drawn by inverse CDF over the flattened grid and positions
/// uniformly inside the cell, so 1D reduces to the exact inverse of the
/// piecewise-linear CDF. Sample `i` uses substream `i` of `"sampling"`.
pub fn sample_quantum_equilibrium(field: &WaveField, spec: &EnsembleSpec, exec: Execution) -> Result<Vec<Point>> {
    spec.validate()?;
    let grid = field.grid();
    let cdf = CellCdf::new(&field.density())?;
    let tree = SeedTree::new(spec.seed).child("sampling");
    Ok(map_range(exec, spec.count, |i| {
        let mut rng = tree.rng(i as u64);
        let (cell, frac) = cdf.invert(rng.random::<f64>());
        let mut p = grid.point(cell);
        p[0] += (frac - 0.5) * grid.dx(0);
        if grid.dims() == 2 {
            p[1] += (rng.random::<f64>() - 0.5) * grid.dx(1);
        }
        p
    }))
}

/// Kolmogorov–Smirnov distance between the axis-0 marginal of `|ψ|²` and the
/// empirical distribution of `positions`.
pub fn equivariance_distance(field: &WaveField, positions: &[Point]) -> f64 {
    if positions.is_empty() {
        return 0.0;
    }
    let grid = field.grid();
    let rho = field.density();
    let n0 = grid.axis(0).points;
    let marginal: Vec<f64> = if grid.dims() == 1 {
        rho
    } else {
        rho.chunks_exact(grid.axis(1).points).map(|row| row.iter().sum()).collect()
    };
    debug_assert_eq!(marginal.len(), n0);
    let Ok(cdf) = CellCdf::new(&marginal) else {
        return 1.0;
    };
    let axis = grid.axis(0);
    let mut xs: Vec<f64> = positions.iter().map(|p| p[0]).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf.eval((x - axis.lower) / axis.dx() + 0.5);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_field::{synthesize_packets, GridSpec, PacketParams};
    use crate::Units;
    use num_complex::Complex64;

    fn uniform_field() -> WaveField {
        // constant on [-4, 4), zero elsewhere
        let grid = GridSpec::line(-8.0, 16.0, 256).unwrap();
        WaveField::from_fn(grid, |x| Complex64::new(if (-4.0..4.0).contains(&x[0]) { 1.0 } else { 0.0 }, 0.0))
            .unwrap()
            .normalized()
            .unwrap()
    }

    #[test]
    fn uniform_interval_passes_ks_against_exact_cdf() {
        let f = uniform_field();
        let n = 20_000;
        let xs = sample_quantum_equilibrium(&f, &EnsembleSpec::new(n, 11), Execution::Parallel).unwrap();
        // the support of the cell density is [-4 - dx/2, 4 - dx/2)
        let dx = f.grid().dx(0);
        let (a, b) = (-4.0 - dx / 2.0, 4.0 - dx / 2.0);
        let mut s: Vec<f64> = xs.iter().map(|p| p[0]).collect();
        s.sort_by(f64::total_cmp);
        let d = s
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = ((x - a) / (b - a)).clamp(0.0, 1.0);
                (c - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - c).abs())
            })
            .fold(0.0, f64::max);
        assert!(d < ks_critical_1pct(n), "{d}");
    }

    #[test]
    fn equal_branches_split_evenly() {
        let grid = GridSpec::line(-32.0, 64.0, 1024).unwrap();
        let f = synthesize_packets(&grid, 1, &[PacketParams::new(-10.0, 1.0), PacketParams::new(10.0, 1.0)], Units::default())
            .unwrap();
        let n = 10_000;
        let xs = sample_quantum_equilibrium(&f, &EnsembleSpec::new(n, 3), Execution::Parallel).unwrap();
        let left = xs.iter().filter(|p| p[0] < 0.0).count() as f64 / n as f64;
        assert!((left - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn deterministic_and_mode_independent() {
        let f = uniform_field();
        let a = sample_quantum_equilibrium(&f, &EnsembleSpec::new(500, 99), Execution::Sequential).unwrap();
        let b = sample_quantum_equilibrium(&f, &EnsembleSpec::new(500, 99), Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn biased_ensemble_is_far() {
        let f = uniform_field();
        let xs: Vec<Point> = (0..1000).map(|i| [-3.9 + 3.8 * i as f64 / 1000.0, 0.0]).collect();
        assert!(equivariance_distance(&f, &xs) > 0.4);
    }

    #[test]
    fn zero_field_is_degenerate() {
        let f = WaveField::zeros(GridSpec::line(0.0, 1.0, 16).unwrap(), 1);
        assert_eq!(sample_quantum_equilibrium(&f, &EnsembleSpec::new(3, 1), Execution::Sequential), Err(Error::DegenerateDensity));
    }
}
