use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Operator, Projector, OPERATOR_TOL};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Logic {
    Or,
    And,
    Not,
}

/// Propositional calculus on projectors.
///
/// * `or`: `P₁ + P₂`, defined only for orthogonal operands.
/// * `and`: projector onto `range(P₁) ∩ range(P₂)`. This is `P₁P₂` whenever
///   the operands commute, and the zero operator for disjoint ones.
/// * `not`: `I − P₁`; `p2` is ignored.
pub fn projector_logic(op: Logic, p1: &Projector, p2: Option<&Projector>) -> Result<Projector> {
    let dim = p1.dim();
    let second = || -> Result<&Projector> {
        let p2 = p2.ok_or(Error::EmptyBasis)?;
        if p2.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: p2.dim() });
        }
        Ok(p2)
    };
    match op {
        Logic::Not => Ok(p1.complement()),
        Logic::Or => {
            let p2 = second()?;
            let norm = p1.overlap_norm(p2);
            if norm >= OPERATOR_TOL {
                return Err(Error::NonOrthogonal { first: 0, second: 1, norm });
            }
            Projector::new(p1.operator().add(p2.operator())?)
        }
        Logic::And => {
            let p2 = second()?;
            let prod = p1.operator().mul(p2.operator())?;
            let swapped = p2.operator().mul(p1.operator())?;
            if prod.distance(&swapped) < OPERATOR_TOL {
                return Ok(Projector::from_operator_unchecked(prod));
            }
            Ok(intersection(p1, p2))
        }
    }
}

/// Eigenvalue-2 eigenspace of `P₁ + P₂`.
fn intersection(p1: &Projector, p2: &Projector) -> Projector {
    let dim = p1.dim();
    let sum: DMatrix<Complex64> = p1.operator().matrix() + p2.operator().matrix();
    let eig = SymmetricEigen::new(sum);
    let mut p = DMatrix::<Complex64>::zeros(dim, dim);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if (lambda - 2.0).abs() < 1e-8 {
            let v = eig.eigenvectors.column(k);
            p += &v * v.adjoint();
        }
    }
    Projector::from_operator_unchecked(Operator::from_matrix_unchecked(p))
}
