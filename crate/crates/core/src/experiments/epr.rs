use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::{Check, ExperimentConfig, ExperimentResult};
use crate::error::StageExt;
use crate::operator_algebra::{matrix_exp_oracle, two_factor_exp, Operator, Projector, ProjectorPartition};
use crate::stochastic::{overbar_average, ParamDensity, Marginal};
use crate::Result;

/// Spin tables of the two-particle singlet after particle 1 picks up
/// `e^{iα}` on `|+z⟩`. Index 0 of every pair is the `+` outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EprTables {
    pub alpha: f64,
    /// `|Σ_{s_z}⟨s_z, ±x|Ψ⟩|²` from `two_factor_exp`.
    pub coherent: [f64; 2],
    /// Same sums from the exponential of `iα P₊z⊗I`.
    pub brute_force: [f64; 2],
    /// `½(1 ∓ cos α)`.
    pub formula: [f64; 2],
    /// `Σ_{s_z}|⟨s_z, ±x|Ψ⟩|²`.
    pub incoherent: [f64; 2],
    /// `p(a, b)` for `σx ⊗ σx` outcomes.
    pub joint: [[f64; 2]; 2],
    /// `‖U − exp(iα P₊z⊗I)‖_F`.
    pub operator_defect: f64,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `|+z⟩ = e₀`, `|−z⟩ = e₁`, `|±x⟩ = (|+z⟩ ± |−z⟩)/√2`.
fn spin_x(sign: f64) -> DVector<Complex64> {
    DVector::from_vec(vec![c(FRAC_1_SQRT_2), c(sign * FRAC_1_SQRT_2)])
}

fn spin_z(i: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(2);
    v[i] = c(1.0);
    v
}

fn kron(a: &DVector<Complex64>, b: &DVector<Complex64>) -> DVector<Complex64> {
    DVector::from_iterator(4, a.iter().flat_map(|x| b.iter().map(move |y| x * y)))
}

/// `(|+z,−z⟩ − |−z,+z⟩)/√2`.
fn singlet() -> DVector<Complex64> {
    (kron(&spin_z(0), &spin_z(1)) - kron(&spin_z(1), &spin_z(0))) * c(FRAC_1_SQRT_2)
}

fn coherent_marginals(psi: &DVector<Complex64>) -> [f64; 2] {
    [1.0, -1.0].map(|s| {
        let x = spin_x(s);
        (0..2).map(|z| kron(&spin_z(z), &x).dotc(psi)).sum::<Complex64>().norm_sqr()
    })
}

pub fn epr_tables(alpha: f64) -> Result<EprTables> {
    let pz = ProjectorPartition::new(vec![Projector::from_indices(2, [0])?, Projector::from_indices(2, [1])?])?;
    let px = ProjectorPartition::new(vec![Projector::from_basis(&[spin_x(1.0)])?, Projector::from_basis(&[spin_x(-1.0)])?])?;
    let u = two_factor_exp(&pz, &px, &DMatrix::from_row_slice(2, 2, &[alpha, alpha, 0.0, 0.0]))?;
    let generator = pz.projectors()[0].operator().kron(&Operator::identity(2)).scale(Complex64::new(0.0, alpha));
    let oracle = matrix_exp_oracle(&generator)?;
    let psi = u.apply(&singlet())?;
    let psi_oracle = oracle.apply(&singlet())?;
    let incoherent = [1.0, -1.0].map(|s| {
        let x = spin_x(s);
        (0..2).map(|z| kron(&spin_z(z), &x).dotc(&psi).norm_sqr()).sum::<f64>()
    });
    let mut joint = [[0.0; 2]; 2];
    for (a, sa) in [1.0, -1.0].into_iter().enumerate() {
        for (b, sb) in [1.0, -1.0].into_iter().enumerate() {
            joint[a][b] = kron(&spin_x(sa), &spin_x(sb)).dotc(&psi).norm_sqr();
        }
    }
    Ok(EprTables {
        alpha,
        coherent: coherent_marginals(&psi),
        brute_force: coherent_marginals(&psi_oracle),
        formula: [0.5 * (1.0 - alpha.cos()), 0.5 * (1.0 + alpha.cos())],
        incoherent,
        joint,
        operator_defect: u.distance(&oracle),
    })
}

/// `max |p(a,b) − p₁(a)p₂(b)|` with marginals taken from the table.
pub(crate) fn bell_gap(joint: &[[f64; 2]; 2]) -> f64 {
    let p1 = [joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]];
    let p2 = [joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]];
    let mut gap = 0.0f64;
    for a in 0..2 {
        for b in 0..2 {
            gap = gap.max((joint[a][b] - p1[a] * p2[b]).abs());
        }
    }
    gap
}

pub(crate) fn run_epr(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let opts = cfg.epr.as_ref().expect("resolved");
    let mut result = ExperimentResult::new(cfg.scenario, cfg.seed);
    let before = epr_tables(0.0).stage("tables")?;
    let after = epr_tables(opts.alpha).stage("tables")?;

    let density = ParamDensity::independent(vec![opts.alpha_density], Marginal::Fixed { value: 0.0 });
    let avg = |f: &(dyn Fn(&EprTables) -> f64 + Sync)| -> Result<f64> {
        let a = overbar_average(
            |p| epr_tables(p.etas[0]).map_or(c(f64::NAN), |t| c(f(&t))),
            &density,
            opts.method,
            cfg.execution,
        )?;
        Ok(a.value.re)
    };
    let averaged = [avg(&|t| t.coherent[0]).stage("average")?, avg(&|t| t.coherent[1]).stage("average")?];
    let mut joint_avg = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            joint_avg[a][b] = avg(&move |t: &EprTables| t.joint[a][b]).stage("average")?;
        }
    }

    let pair = |v: [f64; 2]| vec![v[0], v[1]];
    result.tables.insert("coherent_before".into(), vec![pair(before.coherent)]);
    result.tables.insert("coherent_after".into(), vec![pair(after.coherent)]);
    result.tables.insert("formula_after".into(), vec![pair(after.formula)]);
    result.tables.insert("brute_force_after".into(), vec![pair(after.brute_force)]);
    result.tables.insert("incoherent_before".into(), vec![pair(before.incoherent)]);
    result.tables.insert("incoherent_after".into(), vec![pair(after.incoherent)]);
    result.tables.insert("averaged_after".into(), vec![pair(averaged)]);
    let rows = |j: [[f64; 2]; 2]| j.iter().map(|r| r.to_vec()).collect::<Vec<_>>();
    result.tables.insert("joint_before".into(), rows(before.joint));
    result.tables.insert("joint_after".into(), rows(after.joint));
    result.tables.insert("joint_averaged".into(), rows(joint_avg));

    let joint_change = (0..4).map(|i| (joint_avg[i / 2][i % 2] - before.joint[i / 2][i % 2]).abs()).fold(0.0, f64::max);
    result.scalars.insert("alpha".into(), opts.alpha);
    result.scalars.insert("bell_gap_before".into(), bell_gap(&before.joint));
    result.scalars.insert("bell_gap_after".into(), bell_gap(&after.joint));
    result.scalars.insert("bell_gap_averaged".into(), bell_gap(&joint_avg));
    result.scalars.insert("joint_change_averaged".into(), joint_change);
    result.scalars.insert("averaged_marginal_deviation".into(), (averaged[0] - 0.5).abs().max((averaged[1] - 0.5).abs()));

    let diff = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).abs().max((a[1] - b[1]).abs());
    result.checks.push(Check::at_most("coherent_before", diff(before.coherent, [0.0, 1.0]), 1e-12));
    result.checks.push(Check::at_most("coherent_vs_formula", diff(after.coherent, after.formula), 1e-12));
    result.checks.push(Check::at_most("coherent_vs_brute_force", diff(after.coherent, after.brute_force), 1e-12));
    result.checks.push(Check::at_most("two_factor_vs_oracle", after.operator_defect, 1e-12));
    let local = diff(before.incoherent, [0.5, 0.5]).max(diff(after.incoherent, [0.5, 0.5]));
    result.checks.push(Check::at_most("particle2_statistics_unchanged", local, 1e-12));
    let joint_sum: f64 = after.joint.iter().flatten().sum();
    result.checks.push(Check::at_most("joint_normalized", (joint_sum - 1.0).abs(), 1e-12));
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn special_angles() {
        let t = epr_tables(0.0).unwrap();
        assert!(t.coherent[0].abs() < 1e-15 && (t.coherent[1] - 1.0).abs() < 1e-15);
        let t = epr_tables(PI).unwrap();
        assert!((t.formula[0] - 1.0).abs() < 1e-15 && t.formula[1].abs() < 1e-15);
        assert!((t.coherent[0] - 1.0).abs() < 1e-12);
        let t = epr_tables(PI / 2.0).unwrap();
        assert!((t.formula[0] - 0.5).abs() < 1e-15 && (t.coherent[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn singlet_is_anticorrelated_in_x() {
        let t = epr_tables(0.0).unwrap();
        assert!(t.joint[0][0].abs() < 1e-15 && (t.joint[0][1] - 0.5).abs() < 1e-15);
        assert!((bell_gap(&t.joint) - 0.25).abs() < 1e-15);
    }
}
