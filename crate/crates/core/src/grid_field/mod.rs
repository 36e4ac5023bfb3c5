//! Grid-sampled wavefunctions with spin components.
//!
//! Grids are periodic and uniformly spaced with power-of-two point counts so
//! that free propagation is an exact spectral phase. Amplitudes are stored
//! component-major: `amps[c * npoints + flat]`, with 2D points row-major
//! (axis 0 slow).

mod diagnostics;
mod dynamics;
mod packets;
mod region;
pub(crate) mod spectral;

pub use diagnostics::{
    coincidence_report, coincidence_report_branches, commutator_action_check, commutator_action_piecewise,
    kick_check, BoxReport, BranchReport, CoincidenceReport, CommutatorReport, KickReport, SmoothPotential,
    COINCIDENCE_DERIVATIVE_TOL, COINCIDENCE_EXTERIOR_TOL,
};
pub use dynamics::{
    apply_piecewise_impulse, apply_sg_deflection, extended_impulsive_evolve, free_propagate, split_step_evolve,
    Potential, SgDeflection, SPLIT_STEP_GUARD,
};
pub use packets::{synthesize_packets, PacketParams};
pub use region::{Region, RegionBox, EXTERIOR_LABEL};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Spatial position; the second coordinate is ignored on 1D grids.
pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lower: f64,
    pub extent: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(lower: f64, extent: f64, points: usize) -> Self {
        Self { lower, extent, points }
    }

    /// Symmetric axis `[-half, half)`.
    pub fn centered(half: f64, points: usize) -> Self {
        Self { lower: -half, extent: 2.0 * half, points }
    }

    pub fn dx(&self) -> f64 {
        self.extent / self.points as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.dx()
    }

    pub fn upper(&self) -> f64 {
        self.lower + self.extent
    }
}

/// Uniform periodic grid in one or two dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GridSpec {
    axes: Vec<Axis>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRepr {
    axes: Vec<Axis>,
}

impl TryFrom<GridRepr> for GridSpec {
    type Error = Error;
    fn try_from(repr: GridRepr) -> Result<Self> {
        GridSpec::new(repr.axes)
    }
}

impl From<GridSpec> for GridRepr {
    fn from(grid: GridSpec) -> Self {
        GridRepr { axes: grid.axes }
    }
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidGrid(format!("{} axes; 1 or 2 supported", axes.len())));
        }
        for (a, axis) in axes.iter().enumerate() {
            if !(axis.extent.is_finite() && axis.extent > 0.0 && axis.lower.is_finite()) {
                return Err(Error::InvalidGrid(format!("axis {a}: extent must be positive and finite")));
            }
            if axis.points < 4 || !axis.points.is_power_of_two() {
                return Err(Error::InvalidGrid(format!("axis {a}: {} points is not a power of two ≥ 4", axis.points)));
            }
        }
        Ok(Self { axes })
    }

    pub fn line(lower: f64, extent: f64, points: usize) -> Result<Self> {
        Self::new(vec![Axis::new(lower, extent, points)])
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, a: usize) -> &Axis {
        &self.axes[a]
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self, a: usize) -> f64 {
        self.axes[a].dx()
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::dx).product()
    }

    /// Per-axis indices of a flat index.
    pub fn unflatten(&self, flat: usize) -> [usize; 2] {
        match self.dims() {
            1 => [flat, 0],
            _ => [flat / self.axes[1].points, flat % self.axes[1].points],
        }
    }

    pub fn flatten(&self, idx: [usize; 2]) -> usize {
        match self.dims() {
            1 => idx[0],
            _ => idx[0] * self.axes[1].points + idx[1],
        }
    }

    pub fn point(&self, flat: usize) -> Point {
        let idx = self.unflatten(flat);
        let mut p = [0.0; 2];
        for (a, axis) in self.axes.iter().enumerate() {
            p[a] = axis.coord(idx[a]);
        }
        p
    }

    /// Whether `p` lies in the half-open domain `[lower, upper)` on every axis.
    pub fn contains(&self, p: &Point) -> bool {
        self.axes.iter().enumerate().all(|(a, axis)| p[a] >= axis.lower && p[a] < axis.upper())
    }

    /// Flat index of the neighbour `offset` steps along `axis`, wrapping.
    pub(crate) fn shifted(&self, flat: usize, axis: usize, offset: isize) -> usize {
        let mut idx = self.unflatten(flat);
        let n = self.axes[axis].points as isize;
        idx[axis] = (idx[axis] as isize + offset).rem_euclid(n) as usize;
        self.flatten(idx)
    }
}

/// Complex amplitudes per grid point and spin component, stamped with a time.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    grid: GridSpec,
    spin_dim: usize,
    amps: Vec<Complex64>,
    time: f64,
}

impl WaveField {
    pub fn new(grid: GridSpec, spin_dim: usize, amps: Vec<Complex64>, time: f64) -> Result<Self> {
        if spin_dim == 0 {
            return Err(Error::SpinMismatch { expected: 1, found: 0 });
        }
        let expected = grid.len() * spin_dim;
        if amps.len() != expected {
            return Err(Error::LengthMismatch { what: "amplitudes", expected, found: amps.len() });
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("wave field"));
        }
        Ok(Self { grid, spin_dim, amps, time })
    }

    pub fn zeros(grid: GridSpec, spin_dim: usize) -> Self {
        let n = grid.len() * spin_dim;
        Self { grid, spin_dim, amps: vec![Complex64::new(0.0, 0.0); n], time: 0.0 }
    }

    /// Scalar field sampled from `f` on the grid nodes.
    pub fn from_fn(grid: GridSpec, f: impl Fn(Point) -> Complex64) -> Result<Self> {
        let amps = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::new(grid, 1, amps, 0.0)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn spin_dim(&self) -> usize {
        self.spin_dim
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.amps[c * n..(c + 1) * n]
    }

    pub(crate) fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let n = self.grid.len();
        &mut self.amps[c * n..(c + 1) * n]
    }

    pub(crate) fn components_mut(&mut self) -> std::slice::ChunksExactMut<'_, Complex64> {
        let n = self.grid.len();
        self.amps.chunks_exact_mut(n)
    }

    /// `Σ|ψ|²·dV` over all components.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        let s = 1.0 / n.sqrt();
        self.amps.iter_mut().for_each(|z| *z *= s);
        Ok(self)
    }

    /// Position density summed over spin components.
    pub fn density(&self) -> Vec<f64> {
        let n = self.grid.len();
        let mut rho = vec![0.0; n];
        for comp in self.amps.chunks_exact(n) {
            for (r, z) in rho.iter_mut().zip(comp) {
                *r += z.norm_sqr();
            }
        }
        rho
    }

    pub fn component_density(&self, c: usize) -> Vec<f64> {
        self.component(c).iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.amps.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        self.amps.iter_mut().for_each(|z| *z *= factor);
        self
    }

    pub fn add(&self, other: &WaveField) -> Result<WaveField> {
        self.check_compatible(other)?;
        let amps = self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect();
        Ok(WaveField { grid: self.grid.clone(), spin_dim: self.spin_dim, amps, time: self.time })
    }

    pub fn sub(&self, other: &WaveField) -> Result<WaveField> {
        self.check_compatible(other)?;
        let amps = self.amps.iter().zip(&other.amps).map(|(a, b)| a - b).collect();
        Ok(WaveField { grid: self.grid.clone(), spin_dim: self.spin_dim, amps, time: self.time })
    }

    /// `‖self − other‖₂` with the grid measure.
    pub fn l2_distance(&self, other: &WaveField) -> Result<f64> {
        Ok(self.sub(other)?.norm_sqr().sqrt())
    }

    /// Single-component field holding component `c`.
    pub fn extract_component(&self, c: usize) -> Result<WaveField> {
        if c >= self.spin_dim {
            return Err(Error::SpinMismatch { expected: self.spin_dim, found: c + 1 });
        }
        WaveField::new(self.grid.clone(), 1, self.component(c).to_vec(), self.time)
    }

    /// Sum of all components as one scalar field.
    pub fn component_sum(&self) -> WaveField {
        let n = self.grid.len();
        let mut amps = vec![Complex64::new(0.0, 0.0); n];
        for comp in self.amps.chunks_exact(n) {
            for (s, z) in amps.iter_mut().zip(comp) {
                *s += z;
            }
        }
        WaveField { grid: self.grid.clone(), spin_dim: 1, amps, time: self.time }
    }

    pub(crate) fn check_compatible(&self, other: &WaveField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.spin_dim != other.spin_dim {
            return Err(Error::SpinMismatch { expected: self.spin_dim, found: other.spin_dim });
        }
        Ok(())
    }
}

/// `(⟨f1|f2⟩, ∫|f1|²|f2|²)` by grid quadrature.
pub fn overlap_integral(f1: &WaveField, f2: &WaveField) -> Result<(Complex64, f64)> {
    f1.check_compatible(f2)?;
    let dv = f1.grid.cell_volume();
    let inner: Complex64 = f1.amps.iter().zip(&f2.amps).map(|(a, b)| a.conj() * b).sum::<Complex64>() * dv;
    let density = f1.density().iter().zip(f2.density()).map(|(a, b)| a * b).sum::<f64>() * dv;
    Ok((inner, density))
}

/// `⟨P⟩` per axis by the spectral method, over all components.
pub fn momentum_expectation(field: &WaveField, hbar: f64) -> Vec<f64> {
    let grid = field.grid();
    let mut num = vec![0.0; grid.dims()];
    let mut den = 0.0;
    for c in 0..field.spin_dim() {
        let mut buf = field.component(c).to_vec();
        spectral::forward(grid, &mut buf);
        for (flat, z) in buf.iter().enumerate() {
            let w = z.norm_sqr();
            let k = spectral::wavevector(grid, flat);
            den += w;
            for (a, n) in num.iter_mut().enumerate() {
                *n += w * k[a];
            }
        }
    }
    if den == 0.0 {
        return vec![0.0; grid.dims()];
    }
    num.iter().map(|n| hbar * n / den).collect()
}

/// `⟨X⟩` per axis.
pub fn position_expectation(field: &WaveField) -> Vec<f64> {
    let grid = field.grid();
    let rho = field.density();
    let total: f64 = rho.iter().sum();
    (0..grid.dims())
        .map(|a| rho.iter().enumerate().map(|(i, r)| r * grid.point(i)[a]).sum::<f64>() / total)
        .collect()
}

/// Standard deviation of position along `axis`.
pub fn position_spread(field: &WaveField, axis: usize) -> f64 {
    let grid = field.grid();
    let rho = field.density();
    let total: f64 = rho.iter().sum();
    let mean = rho.iter().enumerate().map(|(i, r)| r * grid.point(i)[axis]).sum::<f64>() / total;
    let var = rho.iter().enumerate().map(|(i, r)| r * (grid.point(i)[axis] - mean).powi(2)).sum::<f64>() / total;
    var.sqrt()
}
