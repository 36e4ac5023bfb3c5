use num_complex::Complex64;

use super::{coincidence_report, spectral, Region, WaveField};
use crate::{Error, Result, Units};

/// Largest admissible `dt·max|V|/ħ` for split-step evolution.
pub const SPLIT_STEP_GUARD: f64 = 0.1;

/// Free evolution `e^{-itP²/2mħ}` applied spectrally to every component.
pub fn free_propagate(field: &WaveField, duration: f64, units: Units) -> Result<WaveField> {
    if !(duration >= 0.0) {
        return Err(Error::NegativeDuration(duration));
    }
    let mut out = field.clone();
    if duration > 0.0 {
        let grid = field.grid().clone();
        let c = duration * units.hbar / (2.0 * units.mass);
        for comp in out.components_mut() {
            spectral::apply_multiplier(&grid, comp, |k| Complex64::from_polar(1.0, -c * (k[0] * k[0] + k[1] * k[1])));
        }
    }
    Ok(out.with_time(field.time() + duration))
}

/// Pure phase imprint `ψ → e^{-iηₖτ/ħ}ψ` inside each box `D_k`; the exterior
/// is untouched.
pub fn apply_piecewise_impulse(field: &WaveField, region: &Region, etas: &[f64], tau: f64, units: Units) -> Result<WaveField> {
    if etas.len() != region.len() {
        return Err(Error::LengthMismatch { what: "etas", expected: region.len(), found: etas.len() });
    }
    if etas.iter().any(|e| !e.is_finite()) || !tau.is_finite() {
        return Err(Error::NonFinite("impulse"));
    }
    let owner = region.assign(field.grid())?;
    let phases: Vec<Complex64> = etas.iter().map(|eta| Complex64::from_polar(1.0, -eta * tau / units.hbar)).collect();
    let mut out = field.clone();
    for comp in out.components_mut() {
        for (z, o) in comp.iter_mut().zip(&owner) {
            if let Some(k) = o {
                *z *= phases[*k];
            }
        }
    }
    Ok(out)
}

/// Stern–Gerlach imprint: component `j` gains `e^{iμⱼα}·e^{iμⱼ x_axis Δp/ħ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SgDeflection {
    pub alpha: f64,
    pub delta_p: f64,
    pub axis: usize,
    /// `μⱼ`, one per spin component.
    pub multipliers: Vec<f64>,
}

impl SgDeflection {
    /// Multipliers `m_j/s` for `m_j = s, s−1, …, −s`, so spin-½ gets `±1`.
    pub fn for_spin(alpha: f64, delta_p: f64, axis: usize, spin_dim: usize) -> Result<Self> {
        if spin_dim < 2 {
            return Err(Error::SpinMismatch { expected: 2, found: spin_dim });
        }
        let s = (spin_dim - 1) as f64 / 2.0;
        let multipliers = (0..spin_dim).map(|j| (s - j as f64) / s).collect();
        Ok(Self { alpha, delta_p, axis, multipliers })
    }

    pub fn with_multipliers(alpha: f64, delta_p: f64, axis: usize, multipliers: Vec<f64>) -> Self {
        Self { alpha, delta_p, axis, multipliers }
    }
}

pub fn apply_sg_deflection(field: &WaveField, deflection: &SgDeflection, units: Units) -> Result<WaveField> {
    if deflection.multipliers.len() != field.spin_dim() {
        return Err(Error::SpinMismatch { expected: deflection.multipliers.len(), found: field.spin_dim() });
    }
    if deflection.axis >= field.grid().dims() {
        return Err(Error::InvalidGrid(format!("deflection axis {} on a {}D grid", deflection.axis, field.grid().dims())));
    }
    let grid = field.grid().clone();
    let mut out = field.clone();
    for (comp, &mu) in out.components_mut().zip(&deflection.multipliers) {
        for (flat, z) in comp.iter_mut().enumerate() {
            let x = grid.point(flat)[deflection.axis];
            *z *= Complex64::from_polar(1.0, mu * (deflection.alpha + x * deflection.delta_p / units.hbar));
        }
    }
    Ok(out)
}

/// Potential for split-step evolution.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    /// `ηₖ` inside box `D_k`, zero outside.
    Boxes { region: Region, etas: Vec<f64> },
    /// One value per grid node.
    Sampled(Vec<f64>),
}

impl Potential {
    fn values(&self, field: &WaveField) -> Result<Vec<f64>> {
        match self {
            Potential::Boxes { region, etas } => {
                if etas.len() != region.len() {
                    return Err(Error::LengthMismatch { what: "etas", expected: region.len(), found: etas.len() });
                }
                Ok(region.assign(field.grid())?.iter().map(|o| o.map_or(0.0, |k| etas[k])).collect())
            }
            Potential::Sampled(v) => {
                if v.len() != field.grid().len() {
                    return Err(Error::LengthMismatch { what: "potential", expected: field.grid().len(), found: v.len() });
                }
                Ok(v.clone())
            }
        }
    }
}

/// Strang splitting `e^{-iVdt/2}·e^{-iKdt}·e^{-iVdt/2}` repeated `steps` times.
pub fn split_step_evolve(field: &WaveField, potential: &Potential, dt: f64, steps: usize, units: Units) -> Result<WaveField> {
    if !(dt > 0.0) {
        return Err(Error::NegativeDuration(dt));
    }
    let v = potential.values(field)?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("potential"));
    }
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let guard = dt * vmax / units.hbar;
    if guard >= SPLIT_STEP_GUARD {
        return Err(Error::AccuracyGuard(guard));
    }
    let grid = field.grid().clone();
    let half: Vec<Complex64> = v.iter().map(|x| Complex64::from_polar(1.0, -0.5 * dt * x / units.hbar)).collect();
    let c = dt * units.hbar / (2.0 * units.mass);
    let mut out = field.clone();
    for comp in out.components_mut() {
        for _ in 0..steps {
            comp.iter_mut().zip(&half).for_each(|(z, h)| *z *= h);
            spectral::apply_multiplier(&grid, comp, |k| Complex64::from_polar(1.0, -c * (k[0] * k[0] + k[1] * k[1])));
            comp.iter_mut().zip(&half).for_each(|(z, h)| *z *= h);
        }
    }
    Ok(out.with_time(field.time() + dt * steps as f64))
}

/// `Σ_m e^{-iτη_m/ħ} c_m ψ_m^{free}(t+τ)`: impulse phases per box, then free
/// propagation for `τ`. Refuses fields that fail the strong coincidence check.
pub fn extended_impulsive_evolve(field: &WaveField, region: &Region, etas: &[f64], tau: f64, units: Units) -> Result<WaveField> {
    let report = coincidence_report(field, region)?;
    if !report.pass {
        return Err(Error::CoincidenceViolation(report.summary()));
    }
    let kicked = apply_piecewise_impulse(field, region, etas, tau, units)?;
    free_propagate(&kicked, tau, units)
}
