use num_complex::Complex64;
use serde::Serialize;

use super::{momentum_expectation, spectral, GridSpec, Point, Region, WaveField};
use crate::{Result, Units};

/// Largest admissible mass outside every box.
pub const COINCIDENCE_EXTERIOR_TOL: f64 = 1e-6;
/// Largest admissible ratio of boundary to global `max|∂ʳψ|`, per order.
pub const COINCIDENCE_DERIVATIVE_TOL: f64 = 5e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxReport {
    pub label: String,
    pub mass: f64,
}

/// Coincidence diagnostics of one field against a region layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoincidenceReport {
    pub boxes: Vec<BoxReport>,
    pub exterior_mass: f64,
    pub total_mass: f64,
    /// Highest derivative order inspected.
    pub order: usize,
    /// Largest `|∂ʳψ|` on box boundary nodes, per order `r = 0..=order`.
    pub boundary_max: Vec<f64>,
    /// `boundary_max[r] / max over the grid of |∂ʳψ|` (0 for a zero field).
    pub boundary_ratio: Vec<f64>,
    pub pass: bool,
}

impl CoincidenceReport {
    pub fn summary(&self) -> String {
        let ratios: Vec<String> = self.boundary_ratio.iter().map(|r| format!("{r:.2e}")).collect();
        format!(
            "exterior mass {:.3e} (tol {COINCIDENCE_EXTERIOR_TOL:e}), boundary derivative ratios [{}] (tol {COINCIDENCE_DERIVATIVE_TOL:e})",
            self.exterior_mass,
            ratios.join(", ")
        )
    }
}

/// Strong-coincidence check with derivative order 2.
pub fn coincidence_report(field: &WaveField, region: &Region) -> Result<CoincidenceReport> {
    coincidence_report_order(field, region, 2)
}

pub fn coincidence_report_order(field: &WaveField, region: &Region, order: usize) -> Result<CoincidenceReport> {
    let grid = field.grid();
    let owner = region.assign(grid)?;
    let dv = grid.cell_volume();
    let rho = field.density();

    let mut masses = vec![0.0; region.len()];
    let mut exterior = 0.0;
    for (r, o) in rho.iter().zip(&owner) {
        match o {
            Some(k) => masses[*k] += r * dv,
            None => exterior += r * dv,
        }
    }

    let mut on_boundary = vec![false; grid.len()];
    for flat in 0..grid.len() {
        for axis in 0..grid.dims() {
            let next = grid.shifted(flat, axis, 1);
            if owner[flat] != owner[next] {
                on_boundary[flat] = true;
                on_boundary[next] = true;
            }
        }
    }

    let mut boundary_max = vec![0.0f64; order + 1];
    let mut global_max = vec![0.0f64; order + 1];
    for c in 0..field.spin_dim() {
        let psi = field.component(c);
        for flat in 0..grid.len() {
            for axis in 0..grid.dims() {
                for (r, (b, g)) in boundary_max.iter_mut().zip(global_max.iter_mut()).enumerate() {
                    let d = central_difference(grid, psi, flat, axis, r).norm();
                    *g = g.max(d);
                    if on_boundary[flat] {
                        *b = b.max(d);
                    }
                }
            }
        }
    }
    let boundary_ratio: Vec<f64> =
        boundary_max.iter().zip(&global_max).map(|(b, g)| if *g > 0.0 { b / g } else { 0.0 }).collect();
    let pass = exterior < COINCIDENCE_EXTERIOR_TOL && boundary_ratio.iter().all(|r| *r <= COINCIDENCE_DERIVATIVE_TOL);
    Ok(CoincidenceReport {
        boxes: region.labels().zip(masses).map(|(l, m)| BoxReport { label: l.to_string(), mass: m }).collect(),
        exterior_mass: exterior,
        total_mass: rho.iter().sum::<f64>() * dv,
        order,
        boundary_max,
        boundary_ratio,
        pass,
    })
}

/// Central finite difference of order `r` (0, 1 or 2; higher orders reuse 2).
fn central_difference(grid: &GridSpec, psi: &[Complex64], flat: usize, axis: usize, r: usize) -> Complex64 {
    let dx = grid.dx(axis);
    let f = |o: isize| psi[grid.shifted(flat, axis, o)];
    match r {
        0 => psi[flat],
        1 => (f(1) - f(-1)) / (2.0 * dx),
        2 => (f(1) - 2.0 * f(0) + f(-1)) / (dx * dx),
        // fourth-order central stencil for the third derivative
        _ => (f(2) - 2.0 * f(1) + 2.0 * f(-1) - f(-2)) / (2.0 * dx * dx * dx),
    }
}

/// Per-branch view: each branch should sit inside one box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchReport {
    /// Box holding most of the branch, `None` if the exterior dominates.
    pub box_index: Option<usize>,
    /// Fraction of the branch norm inside that box.
    pub interior_mass: f64,
    pub report: CoincidenceReport,
}

pub fn coincidence_report_branches(branches: &[WaveField], region: &Region) -> Result<Vec<BranchReport>> {
    branches
        .iter()
        .map(|b| {
            let report = coincidence_report(b, region)?;
            let total = report.total_mass;
            let best = report.boxes.iter().enumerate().max_by(|x, y| x.1.mass.total_cmp(&y.1.mass));
            let (box_index, mass) = match best {
                Some((k, bx)) if bx.mass >= report.exterior_mass => (Some(k), bx.mass),
                _ => (None, report.exterior_mass),
            };
            let interior_mass = if total > 0.0 { mass / total } else { 0.0 };
            Ok(BranchReport { box_index, interior_mass, report })
        })
        .collect()
}

/// Smooth potential sampled with its gradient and Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothPotential {
    pub values: Vec<f64>,
    pub gradient: Vec<Point>,
    pub laplacian: Vec<f64>,
}

impl SmoothPotential {
    /// `f(x) = (V, ∇V, ∇²V)` evaluated analytically at every node.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(Point) -> (f64, Point, f64)) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        let mut gradient = Vec::with_capacity(grid.len());
        let mut laplacian = Vec::with_capacity(grid.len());
        for flat in 0..grid.len() {
            let (v, g, l) = f(grid.point(flat));
            values.push(v);
            gradient.push(g);
            laplacian.push(l);
        }
        Self { values, gradient, laplacian }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KickReport {
    /// `⟨P⟩_after − ⟨P⟩_before`.
    pub measured: Vec<f64>,
    /// `−τ∫∇V|ψ|²`.
    pub predicted: Vec<f64>,
    pub deviation: f64,
}

/// Momentum kick of the impulsive map `ψ → e^{-iVτ/ħ}ψ`.
pub fn kick_check(field: &WaveField, potential: &SmoothPotential, tau: f64, units: Units) -> Result<KickReport> {
    let grid = field.grid();
    let before = momentum_expectation(field, units.hbar);
    let mut kicked = field.clone();
    for comp in kicked.components_mut() {
        for (z, v) in comp.iter_mut().zip(&potential.values) {
            *z *= Complex64::from_polar(1.0, -v * tau / units.hbar);
        }
    }
    let after = momentum_expectation(&kicked, units.hbar);
    let rho = field.density();
    let norm: f64 = rho.iter().sum();
    let predicted: Vec<f64> = (0..grid.dims())
        .map(|a| -tau * rho.iter().zip(&potential.gradient).map(|(r, g)| r * g[a]).sum::<f64>() / norm)
        .collect();
    let measured: Vec<f64> = after.iter().zip(&before).map(|(a, b)| a - b).collect();
    let deviation = measured.iter().zip(&predicted).map(|(m, p)| (m - p).abs()).fold(0.0, f64::max);
    Ok(KickReport { measured, predicted, deviation })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutatorReport {
    /// `max |[K,V]ψ|`.
    pub max_action: f64,
    /// `max |[K,V]ψ − analytic|` (smooth branch only, 0 otherwise).
    pub max_deviation: f64,
    pub max_psi: f64,
}

impl CommutatorReport {
    pub fn relative_action(&self) -> f64 {
        if self.max_psi > 0.0 {
            self.max_action / self.max_psi
        } else {
            0.0
        }
    }
}

/// Compares `K(Vψ) − V(Kψ)` with `−(ħ²/2m)(∇²V ψ + 2∇V·∇ψ)` using spectral
/// derivatives.
pub fn commutator_action_check(field: &WaveField, potential: &SmoothPotential, units: Units) -> Result<CommutatorReport> {
    let grid = field.grid();
    let c = units.hbar * units.hbar / (2.0 * units.mass);
    let mut max_action = 0.0f64;
    let mut max_deviation = 0.0f64;
    for comp in 0..field.spin_dim() {
        let psi = field.component(comp);
        let v_psi: Vec<Complex64> = psi.iter().zip(&potential.values).map(|(z, v)| z * v).collect();
        let k_vpsi = spectral::laplacian(grid, &v_psi);
        let k_psi = spectral::laplacian(grid, psi);
        let grads: Vec<Vec<Complex64>> = (0..grid.dims()).map(|a| spectral::derivative(grid, psi, a)).collect();
        for i in 0..grid.len() {
            let action = -c * (k_vpsi[i] - potential.values[i] * k_psi[i]);
            let mut rhs = potential.laplacian[i] * psi[i];
            for (a, g) in grads.iter().enumerate() {
                rhs += 2.0 * potential.gradient[i][a] * g[i];
            }
            let rhs = -c * rhs;
            max_action = max_action.max(action.norm());
            max_deviation = max_deviation.max((action - rhs).norm());
        }
    }
    Ok(CommutatorReport { max_action, max_deviation, max_psi: field.max_abs() })
}

/// `[K,V]ψ` for a piecewise-constant box potential with the three-point
/// Laplacian, which keeps the action local to box edges.
pub fn commutator_action_piecewise(field: &WaveField, region: &Region, etas: &[f64], units: Units) -> Result<CommutatorReport> {
    let grid = field.grid();
    if etas.len() != region.len() {
        return Err(crate::Error::LengthMismatch { what: "etas", expected: region.len(), found: etas.len() });
    }
    let v: Vec<f64> = region.assign(grid)?.iter().map(|o| o.map_or(0.0, |k| etas[k])).collect();
    let c = units.hbar * units.hbar / (2.0 * units.mass);
    let mut max_action = 0.0f64;
    for comp in 0..field.spin_dim() {
        let psi = field.component(comp);
        for i in 0..grid.len() {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..grid.dims() {
                let dx2 = grid.dx(a).powi(2);
                let (ip, im) = (grid.shifted(i, a, 1), grid.shifted(i, a, -1));
                acc += ((v[ip] - v[i]) * psi[ip] + (v[im] - v[i]) * psi[im]) / dx2;
            }
            max_action = max_action.max((-c * acc).norm());
        }
    }
    Ok(CommutatorReport { max_action, max_deviation: 0.0, max_psi: field.max_abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_field::{synthesize_packets, PacketParams};
    use statrs::function::erf::erfc;

    fn line() -> GridSpec {
        GridSpec::line(-64.0, 128.0, 2048).unwrap()
    }

    fn packet(x0: f64, sigma: f64) -> WaveField {
        synthesize_packets(&line(), 1, &[PacketParams::new(x0, sigma)], Units::default()).unwrap()
    }

    #[test]
    fn six_sigma_margin_passes() {
        let region = Region::intervals(&[-6.0, 6.0], ["D"]).unwrap();
        let report = coincidence_report(&packet(0.0, 1.0), &region).unwrap();
        assert!(report.pass, "{}", report.summary());
        // two-sided Gaussian tail of |ψ|² (std σ) beyond 6σ
        // the node sum differs from the integral by about ρ(edge)·dx
        let tail = erfc(6.0 / 2f64.sqrt());
        let edge = (-18.0f64).exp() / (2.0 * std::f64::consts::PI).sqrt() * line().dx(0);
        assert!((1.0 - report.boxes[0].mass - tail).abs() < edge);
        assert!((report.exterior_mass - tail).abs() < edge);
    }

    #[test]
    fn five_sigma_margin_fails_derivative_test() {
        let region = Region::intervals(&[-5.0, 5.0], ["D"]).unwrap();
        let report = coincidence_report(&packet(0.0, 1.0), &region).unwrap();
        assert!(!report.pass);
    }

    #[test]
    fn edge_centred_packet_fails_with_half_mass() {
        let region = Region::intervals(&[0.0, 20.0], ["D"]).unwrap();
        let f = packet(0.0, 1.0);
        let report = coincidence_report(&f, &region).unwrap();
        assert!(!report.pass);
        let branches = coincidence_report_branches(&[f], &region).unwrap();
        assert!((branches[0].interior_mass - 0.5).abs() < 0.02);
    }

    #[test]
    fn zero_field_passes_vacuously() {
        let region = Region::intervals(&[0.0, 20.0], ["D"]).unwrap();
        let report = coincidence_report(&WaveField::zeros(line(), 2), &region).unwrap();
        assert!(report.pass);
        assert_eq!(report.total_mass, 0.0);
        assert!(report.boxes.iter().all(|b| b.mass == 0.0));
    }

    #[test]
    fn plane_weighted_packet_momentum() {
        let f = synthesize_packets(&line(), 1, &[PacketParams::new(0.0, 2.0).with_momentum(3.0)], Units::default()).unwrap();
        assert!((momentum_expectation(&f, 1.0)[0] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn linear_potential_kick_is_uniform() {
        let g = 0.8;
        let v = SmoothPotential::from_fn(&line(), |p| (g * p[0], [g, 0.0], 0.0));
        let k = kick_check(&packet(3.0, 1.0), &v, 0.5, Units::default()).unwrap();
        assert!((k.measured[0] + 0.5 * g).abs() < 1e-8, "{:?}", k);
    }

    #[test]
    fn gaussian_bump_kick() {
        let v = SmoothPotential::from_fn(&line(), |p| {
            let x = p[0];
            let e = 2.0 * (-x * x / 8.0).exp();
            (e, [-x / 4.0 * e, 0.0], (x * x / 16.0 - 0.25) * e)
        });
        let k = kick_check(&packet(1.5, 1.0), &v, 0.3, Units::default()).unwrap();
        assert!(k.deviation < 1e-6, "{:?}", k);
    }

    #[test]
    fn commutator_smooth_and_piecewise() {
        let f = packet(0.5, 1.0);
        let constant = SmoothPotential::from_fn(f.grid(), |_| (3.0, [0.0, 0.0], 0.0));
        assert!(commutator_action_check(&f, &constant, Units::default()).unwrap().max_action < 1e-12);
        let quadratic = SmoothPotential::from_fn(f.grid(), |p| (p[0] * p[0], [2.0 * p[0], 0.0], 2.0));
        let r = commutator_action_check(&f, &quadratic, Units::default()).unwrap();
        assert!(r.max_deviation < 1e-6, "{:?}", r);
        assert!(r.max_action > 0.1);
        let region = Region::intervals(&[-15.0, 15.0], ["D"]).unwrap();
        let r = commutator_action_piecewise(&f, &region, &[2.0], Units::default()).unwrap();
        assert!(r.relative_action() < 1e-6, "{:?}", r);
    }
}
