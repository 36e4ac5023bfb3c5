use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{GridSpec, WaveField};
use crate::{Error, Result, Units};

/// Minimum distance from a packet center to the grid edge, in widths.
const CENTER_MARGIN: f64 = 5.0;
/// Largest amplitude a single packet may have on a grid boundary node.
const BOUNDARY_AMPLITUDE: f64 = 1e-10;

/// One Gaussian packet `c·σ^{-1/2}(2π)^{-1/4}·e^{iα}·e^{ip·x/ħ}·e^{-(x-x₀)²/4σ²}`
/// placed in spin component `spin_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketParams {
    #[serde(default = "unit_weight")]
    pub weight: Complex64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub momentum: Vec<f64>,
    pub center: Vec<f64>,
    pub width: f64,
    #[serde(default)]
    pub spin_index: usize,
}

fn unit_weight() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl PacketParams {
    pub fn new(center: f64, width: f64) -> Self {
        Self { weight: unit_weight(), phase: 0.0, momentum: vec![0.0], center: vec![center], width, spin_index: 0 }
    }

    pub fn with_weight(mut self, weight: Complex64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_momentum(mut self, p: f64) -> Self {
        self.momentum = vec![p];
        self
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn in_component(mut self, spin_index: usize) -> Self {
        self.spin_index = spin_index;
        self
    }

    fn momentum_on(&self, axis: usize) -> f64 {
        self.momentum.get(axis).copied().unwrap_or(0.0)
    }

    /// Un-normalized single-packet amplitude at `x` (per-axis 1D factors).
    pub(crate) fn amplitude(&self, x: &[f64], hbar: f64) -> Complex64 {
        let mut z = self.weight * Complex64::from_polar(1.0, self.phase);
        for (a, &xa) in x.iter().enumerate() {
            let d = xa - self.center[a];
            let envelope = (2.0 * PI).powf(-0.25) / self.width.sqrt() * (-d * d / (4.0 * self.width * self.width)).exp();
            z *= Complex64::from_polar(envelope, self.momentum_on(a) * xa / hbar);
        }
        z
    }

    fn validate(&self, index: usize, grid: &GridSpec, spin_dim: usize) -> Result<()> {
        let touch = |detail: String| Error::PacketTouchesBoundary { index, detail };
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(touch(format!("width {} is not positive", self.width)));
        }
        if self.center.len() != grid.dims() {
            return Err(Error::LengthMismatch { what: "packet center", expected: grid.dims(), found: self.center.len() });
        }
        if self.momentum.len() > grid.dims() {
            return Err(Error::LengthMismatch {
                what: "packet momentum",
                expected: grid.dims(),
                found: self.momentum.len(),
            });
        }
        if self.spin_index >= spin_dim {
            return Err(Error::SpinMismatch { expected: spin_dim, found: self.spin_index + 1 });
        }
        for (a, axis) in grid.axes().iter().enumerate() {
            let margin = (self.center[a] - axis.lower).min(axis.upper() - self.center[a]);
            if margin < CENTER_MARGIN * self.width {
                return Err(touch(format!(
                    "center {} on axis {a} is {:.3} widths from the edge (need {CENTER_MARGIN})",
                    self.center[a],
                    margin / self.width
                )));
            }
        }
        Ok(())
    }
}

/// Normalized superposition of Gaussian packets on `grid`.
pub fn synthesize_packets(grid: &GridSpec, spin_dim: usize, params: &[PacketParams], units: Units) -> Result<WaveField> {
    let mut field = WaveField::zeros(grid.clone(), spin_dim);
    let n = grid.len();
    for (index, p) in params.iter().enumerate() {
        p.validate(index, grid, spin_dim)?;
        let values: Vec<Complex64> =
            (0..n).map(|flat| p.amplitude(&grid.point(flat)[..grid.dims()], units.hbar)).collect();
        let edge = boundary_max(grid, &values);
        if edge >= BOUNDARY_AMPLITUDE * p.weight.norm().max(1e-300) {
            return Err(Error::PacketTouchesBoundary {
                index,
                detail: format!("boundary amplitude {edge:.3e} ≥ {BOUNDARY_AMPLITUDE:e}"),
            });
        }
        for (z, v) in field.component_mut(p.spin_index).iter_mut().zip(values) {
            *z += v;
        }
    }
    field.normalized()
}

fn boundary_max(grid: &GridSpec, values: &[Complex64]) -> f64 {
    (0..grid.len())
        .filter(|&flat| {
            let idx = grid.unflatten(flat);
            grid.axes().iter().enumerate().any(|(a, axis)| idx[a] == 0 || idx[a] == axis.points - 1)
        })
        .map(|flat| values[flat].norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_field::{overlap_integral, Axis};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn line() -> GridSpec {
        GridSpec::line(-32.0, 64.0, 1024).unwrap()
    }

    #[test]
    fn single_packet_is_positive_and_normalized() {
        let f = synthesize_packets(&line(), 1, &[PacketParams::new(0.0, 1.0)], Units::default()).unwrap();
        assert!((f.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(f.amplitudes().iter().all(|z| z.im == 0.0 && z.re >= 0.0));
        // grid normalization agrees with the analytic prefactor
        let peak = f.amplitudes()[512].re;
        assert!((peak - (2.0 * PI).powf(-0.25)).abs() < 1e-12);
    }

    #[test]
    fn disjoint_packets_add_densities() {
        let grid = line();
        let w = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let a = PacketParams::new(-10.0, 1.0).with_weight(w);
        let b = PacketParams::new(10.0, 1.0).with_weight(w);
        let sum = synthesize_packets(&grid, 1, &[a.clone(), b.clone()], Units::default()).unwrap();
        let fa = synthesize_packets(&grid, 1, &[a], Units::default()).unwrap().scaled(w);
        let fb = synthesize_packets(&grid, 1, &[b], Units::default()).unwrap().scaled(w);
        let (cross, _) = overlap_integral(&fa, &fb).unwrap();
        assert!(cross.norm() < 1e-10);
        let dv = grid.cell_volume();
        let deviation: f64 = sum
            .density()
            .iter()
            .zip(fa.density().iter().zip(fb.density()))
            .map(|(s, (x, y))| (s - x - y).abs() * dv)
            .sum();
        assert!(deviation < 1e-10);
    }

    #[test]
    fn quarter_phase_is_factor_i() {
        let grid = line();
        let p = PacketParams::new(1.0, 1.5).with_momentum(0.7);
        let f0 = synthesize_packets(&grid, 1, &[p.clone()], Units::default()).unwrap();
        let f1 = synthesize_packets(&grid, 1, &[p.with_phase(PI / 2.0)], Units::default()).unwrap();
        let expected = f0.scaled(Complex64::new(0.0, 1.0));
        assert!(f1.l2_distance(&expected).unwrap() < 1e-14);
    }

    #[test]
    fn rejects_packets_near_the_edge() {
        let grid = line();
        let err = synthesize_packets(&grid, 1, &[PacketParams::new(29.0, 1.0)], Units::default());
        assert!(matches!(err, Err(Error::PacketTouchesBoundary { index: 0, .. })));
        // 5σ margin but amplitude at the edge still far above 1e-10
        let err = synthesize_packets(&grid, 1, &[PacketParams::new(26.0, 1.0)], Units::default());
        assert!(matches!(err, Err(Error::PacketTouchesBoundary { .. })));
    }

    #[test]
    fn cancelling_packets_have_zero_norm() {
        let p = PacketParams::new(0.0, 1.0);
        let q = p.clone().with_weight(Complex64::new(-1.0, 0.0));
        assert_eq!(synthesize_packets(&line(), 1, &[p, q], Units::default()), Err(Error::ZeroNorm));
    }

    #[test]
    fn two_dimensional_packet_is_normalized() {
        let grid = GridSpec::new(vec![Axis::centered(16.0, 128), Axis::centered(16.0, 64)]).unwrap();
        let p = PacketParams { center: vec![1.0, -2.0], momentum: vec![0.5, 0.0], ..PacketParams::new(0.0, 1.0) };
        let f = synthesize_packets(&grid, 1, &[p], Units::default()).unwrap();
        let peak = f.amplitudes().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((peak - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-3);
    }
}
