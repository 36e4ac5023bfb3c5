use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::grid_field::{spectral, GridSpec, Point, WaveField};
use crate::{Error, Result, Units};

/// How a multi-component field guides the (position-only) configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinRule {
    /// Guide with the scalar `Σ_c ψ_c` (unit weights).
    #[default]
    ComponentSum,
    /// `v = (ħ/m) Im(Σ_c ψ_c*∇ψ_c) / Σ_c|ψ_c|²`.
    DensityWeighted,
}

/// Field snapshot with precomputed spectral gradients, ready for pointwise
/// velocity queries.
#[derive(Debug, Clone)]
pub struct GuidanceField {
    grid: GridSpec,
    /// Component-major amplitudes of the guiding components.
    psi: Vec<Complex64>,
    /// Per axis, component-major gradients.
    grad: Vec<Vec<Complex64>>,
    components: usize,
    rule: SpinRule,
    max_density: f64,
    velocity_scale: f64,
}

impl GuidanceField {
    pub fn new(field: &WaveField, rule: SpinRule, units: Units) -> Self {
        let grid = field.grid().clone();
        let guiding = match rule {
            SpinRule::ComponentSum => field.component_sum(),
            SpinRule::DensityWeighted => field.clone(),
        };
        let components = guiding.spin_dim();
        let max_density = match rule {
            SpinRule::ComponentSum => guiding.density().into_iter().fold(0.0, f64::max),
            SpinRule::DensityWeighted => field.density().into_iter().fold(0.0, f64::max),
        };
        let grad = (0..grid.dims())
            .map(|a| (0..components).flat_map(|c| spectral::derivative(&grid, guiding.component(c), a)).collect())
            .collect();
        Self {
            grid,
            psi: guiding.into_amplitudes(),
            grad,
            components,
            rule,
            max_density,
            velocity_scale: units.hbar / units.mass,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn max_density(&self) -> f64 {
        self.max_density
    }

    /// Guidance velocity at `x`; errors within `node_epsilon·max density` of a node.
    pub fn velocity(&self, x: &Point, node_epsilon: f64) -> Result<Point> {
        if !self.grid.contains(x) {
            return Err(Error::OutsideGrid(x[..self.grid.dims()].to_vec()));
        }
        let stencil = Stencil::new(&self.grid, x);
        let n = self.grid.len();
        let dims = self.grid.dims();
        let mut density = 0.0;
        let mut current = [0.0; 2];
        let mut sum_psi = Complex64::new(0.0, 0.0);
        let mut sum_grad = [Complex64::new(0.0, 0.0); 2];
        for c in 0..self.components {
            let off = c * n;
            let psi = stencil.apply(&self.psi[off..off + n]);
            let mut g = [Complex64::new(0.0, 0.0); 2];
            for (a, ga) in g.iter_mut().enumerate().take(dims) {
                *ga = stencil.apply(&self.grad[a][off..off + n]);
            }
            density += psi.norm_sqr();
            for a in 0..dims {
                current[a] += (psi.conj() * g[a]).im;
            }
            sum_psi = psi;
            sum_grad = g;
        }
        if density < node_epsilon * self.max_density || density == 0.0 {
            return Err(Error::NodeProximity { position: x[..dims].to_vec(), density });
        }
        let mut v = [0.0; 2];
        for a in 0..dims {
            v[a] = self.velocity_scale
                * match self.rule {
                    SpinRule::ComponentSum => (sum_grad[a] / sum_psi).im,
                    SpinRule::DensityWeighted => current[a] / density,
                };
        }
        Ok(v)
    }

    /// Largest on-grid speed where the density exceeds `floor·max density`.
    pub fn max_speed(&self, floor: f64) -> f64 {
        let n = self.grid.len();
        let mut best = 0.0f64;
        for i in 0..n {
            let mut rho = 0.0;
            let mut j = [0.0; 2];
            for c in 0..self.components {
                let psi = self.psi[c * n + i];
                rho += psi.norm_sqr();
                for (a, ja) in j.iter_mut().enumerate().take(self.grid.dims()) {
                    *ja += (psi.conj() * self.grad[a][c * n + i]).im;
                }
            }
            if rho > floor * self.max_density && rho > 0.0 {
                let speed = (j[0] * j[0] + j[1] * j[1]).sqrt() / rho;
                best = best.max(speed * self.velocity_scale);
            }
        }
        best
    }
}

/// Cubic Lagrange interpolation weights on a periodic grid (tensor product in 2D).
struct Stencil {
    idx: [[usize; 4]; 2],
    w: [[f64; 4]; 2],
    dims: usize,
    stride: usize,
}

impl Stencil {
    fn new(grid: &GridSpec, x: &Point) -> Self {
        let mut idx = [[0; 4]; 2];
        let mut w = [[1.0, 0.0, 0.0, 0.0]; 2];
        for (a, axis) in grid.axes().iter().enumerate() {
            let s = (x[a] - axis.lower) / axis.dx();
            let base = s.floor();
            let t = s - base;
            let n = axis.points as isize;
            for (k, slot) in idx[a].iter_mut().enumerate() {
                *slot = (base as isize + k as isize - 1).rem_euclid(n) as usize;
            }
            w[a] = [
                -t * (t - 1.0) * (t - 2.0) / 6.0,
                (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                -(t + 1.0) * t * (t - 2.0) / 2.0,
                (t + 1.0) * t * (t - 1.0) / 6.0,
            ];
        }
        let stride = if grid.dims() == 2 { grid.axis(1).points } else { 1 };
        Self { idx, w, dims: grid.dims(), stride }
    }

    fn apply(&self, data: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        if self.dims == 1 {
            for k in 0..4 {
                acc += data[self.idx[0][k]] * self.w[0][k];
            }
            return acc;
        }
        for i in 0..4 {
            let row = self.idx[0][i] * self.stride;
            let mut inner = Complex64::new(0.0, 0.0);
            for j in 0..4 {
                inner += data[row + self.idx[1][j]] * self.w[1][j];
            }
            acc += inner * self.w[0][i];
        }
        acc
    }
}

/// One-off velocity query; builds a [`GuidanceField`] for the call.
pub fn velocity_at(field: &WaveField, x: &Point, rule: SpinRule, node_epsilon: f64, units: Units) -> Result<Point> {
    GuidanceField::new(field, rule, units).velocity(x, node_epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_field::{synthesize_packets, PacketParams};
    use std::f64::consts::PI;

    #[test]
    fn plane_wave_velocity_is_momentum() {
        // exactly periodic plane wave: p = 2π·8/L
        let grid = GridSpec::line(0.0, 16.0, 256).unwrap();
        let p = 2.0 * PI * 8.0 / 16.0;
        let f = WaveField::from_fn(grid, |x| Complex64::from_polar(1.0, p * x[0])).unwrap();
        for x in [0.1, 3.37, 15.9] {
            let v = velocity_at(&f, &[x, 0.0], SpinRule::ComponentSum, 1e-8, Units::default()).unwrap();
            assert!((v[0] - p).abs() < 1e-10);
        }
    }

    #[test]
    fn real_gaussian_is_at_rest() {
        let grid = GridSpec::line(-32.0, 64.0, 1024).unwrap();
        let f = synthesize_packets(&grid, 1, &[PacketParams::new(0.0, 1.5)], Units::default()).unwrap();
        for x in [-3.0, -0.4, 0.0, 2.2] {
            let v = velocity_at(&f, &[x, 0.0], SpinRule::ComponentSum, 1e-8, Units::default()).unwrap();
            assert!(v[0].abs() < 1e-10);
        }
    }

    #[test]
    fn superposition_matches_phase_differences() {
        let grid = GridSpec::line(-32.0, 64.0, 1024).unwrap();
        let f = synthesize_packets(
            &grid,
            1,
            &[PacketParams::new(-1.5, 1.0).with_momentum(1.0), PacketParams::new(1.5, 1.2).with_momentum(-0.5)],
            Units::default(),
        )
        .unwrap();
        let g = GuidanceField::new(&f, SpinRule::ComponentSum, Units::default());
        let packet = |x: f64| -> Complex64 {
            [(-1.5, 1.0, 1.0), (1.5, 1.2, -0.5)]
                .iter()
                .map(|&(c, s, p): &(f64, f64, f64)| {
                    Complex64::from_polar(s.powf(-0.5) * (-(x - c).powi(2) / (4.0 * s * s)).exp(), p * x)
                })
                .sum()
        };
        let h = 1e-5;
        for x in [-2.3, -0.7, 0.45, 1.9] {
            let mut darg = (packet(x + h) / packet(x - h)).arg();
            darg = darg.rem_euclid(2.0 * PI);
            if darg > PI {
                darg -= 2.0 * PI;
            }
            let fd = darg / (2.0 * h);
            let v = g.velocity(&[x, 0.0], 1e-8).unwrap();
            assert!((v[0] - fd).abs() < 1e-5, "x={x}: {} vs {fd}", v[0]);
        }
    }

    #[test]
    fn node_proximity_is_reported() {
        let grid = GridSpec::line(-32.0, 64.0, 1024).unwrap();
        let f = WaveField::from_fn(grid, |x| Complex64::new(x[0] * (-x[0] * x[0] / 4.0).exp(), 0.0)).unwrap();
        let err = velocity_at(&f, &[0.0, 0.0], SpinRule::ComponentSum, 1e-8, Units::default());
        assert!(matches!(err, Err(Error::NodeProximity { .. })));
        let err = velocity_at(&f, &[100.0, 0.0], SpinRule::ComponentSum, 1e-8, Units::default());
        assert!(matches!(err, Err(Error::OutsideGrid(_))));
    }

    #[test]
    fn rules_agree_for_disjoint_components() {
        let grid = GridSpec::line(-32.0, 64.0, 1024).unwrap();
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let f = synthesize_packets(
            &grid,
            2,
            &[
                PacketParams::new(-10.0, 1.0).with_momentum(-1.0).with_weight(h),
                PacketParams::new(10.0, 1.0).with_momentum(1.5).with_weight(h).in_component(1),
            ],
            Units::default(),
        )
        .unwrap();
        let a = GuidanceField::new(&f, SpinRule::ComponentSum, Units::default());
        let b = GuidanceField::new(&f, SpinRule::DensityWeighted, Units::default());
        for x in [-11.0, -9.5, 9.0, 12.0] {
            let va = a.velocity(&[x, 0.0], 1e-8).unwrap();
            let vb = b.velocity(&[x, 0.0], 1e-8).unwrap();
            assert!((va[0] - vb[0]).abs() < 1e-9);
        }
    }
}
