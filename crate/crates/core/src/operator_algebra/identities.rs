use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{matrix_exp_oracle, Operator, PhaseVector, ProjectorPartition};
use crate::{Error, Result};

/// `Σₖ e^{iαₖ} Pₖ` for a complete partition.
pub fn coarse_grained_exp(partition: &ProjectorPartition, alphas: &PhaseVector) -> Result<Operator> {
    if alphas.len() != partition.len() {
        return Err(Error::LengthMismatch { what: "phase vector", expected: partition.len(), found: alphas.len() });
    }
    partition.require_complete()?;
    let dim = partition.dim();
    let mut u = DMatrix::<Complex64>::zeros(dim, dim);
    for (p, &alpha) in partition.projectors().iter().zip(alphas.as_slice()) {
        u += p.operator().matrix() * Complex64::from_polar(1.0, alpha);
    }
    Ok(Operator::from_matrix_unchecked(u))
}

/// `Σ_{r,s} e^{iα_rs} P_r ⊗ P_s`. Zero phases contribute the bare product
/// `P_r ⊗ P_s`, so a single nonzero phase leaves every other block intact.
pub fn two_factor_exp(
    partition_r: &ProjectorPartition,
    partition_s: &ProjectorPartition,
    alphas: &DMatrix<f64>,
) -> Result<Operator> {
    if alphas.nrows() != partition_r.len() {
        return Err(Error::LengthMismatch { what: "phase rows", expected: partition_r.len(), found: alphas.nrows() });
    }
    if alphas.ncols() != partition_s.len() {
        return Err(Error::LengthMismatch { what: "phase columns", expected: partition_s.len(), found: alphas.ncols() });
    }
    if alphas.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("phase matrix"));
    }
    partition_r.require_complete()?;
    partition_s.require_complete()?;
    let dim = partition_r.dim() * partition_s.dim();
    let mut u = DMatrix::<Complex64>::zeros(dim, dim);
    for (r, pr) in partition_r.projectors().iter().enumerate() {
        for (s, ps) in partition_s.projectors().iter().enumerate() {
            let block = pr.operator().kron(ps.operator());
            u += block.matrix() * Complex64::from_polar(1.0, alphas[(r, s)]);
        }
    }
    Ok(Operator::from_matrix_unchecked(u))
}

/// Spectral data `Q = Σ q P_q` with a complete projector family.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectral {
    eigenvalues: Vec<f64>,
    partition: ProjectorPartition,
}

impl Spectral {
    pub fn new(eigenvalues: Vec<f64>, partition: ProjectorPartition) -> Result<Self> {
        if eigenvalues.len() != partition.len() {
            return Err(Error::LengthMismatch {
                what: "eigenvalues",
                expected: partition.len(),
                found: eigenvalues.len(),
            });
        }
        if eigenvalues.iter().any(|q| !q.is_finite()) {
            return Err(Error::NonFinite("eigenvalues"));
        }
        partition.require_complete()?;
        Ok(Self { eigenvalues, partition })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn partition(&self) -> &ProjectorPartition {
        &self.partition
    }

    /// Reassembles `Σ q P_q`.
    pub fn operator(&self) -> Operator {
        let dim = self.partition.dim();
        let mut q = DMatrix::<Complex64>::zeros(dim, dim);
        for (p, &ev) in self.partition.projectors().iter().zip(&self.eigenvalues) {
            q += p.operator().matrix() * Complex64::new(ev, 0.0);
        }
        Operator::from_matrix_unchecked(q)
    }
}

/// `exp(i Q⊗R) = Σ_q P_q ⊗ exp(i q R)`.
pub fn tensor_factor_exp(q: &Spectral, r: &Operator) -> Result<Operator> {
    let dim = q.partition.dim() * r.dim();
    let mut u = DMatrix::<Complex64>::zeros(dim, dim);
    for (p, &ev) in q.partition.projectors().iter().zip(&q.eigenvalues) {
        let factor = matrix_exp_oracle(&r.scale(Complex64::new(0.0, ev)))?;
        u += p.operator().kron(&factor).matrix();
    }
    Ok(Operator::from_matrix_unchecked(u))
}

/// Campbell–Hausdorff exponent `η(A,B)` with `e^A e^B = e^η`, truncated:
///
/// * order 1: `A + B`
/// * order 2: `+ ½[A,B]`
/// * order 3: `+ (1/12)[[A,B],B] + (1/12)[[B,A],A]`
pub fn bch_eta_truncated(a: &Operator, b: &Operator, order: usize) -> Result<Operator> {
    if !(1..=3).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    let mut eta = a.add(b)?;
    if order >= 2 {
        let ab = a.commutator(b)?;
        eta = eta.add(&ab.scale(Complex64::new(0.5, 0.0)))?;
        if order >= 3 {
            let ab_b = ab.commutator(b)?;
            let ba_a = b.commutator(a)?.commutator(a)?;
            let third = ab_b.add(&ba_a)?.scale(Complex64::new(1.0 / 12.0, 0.0));
            eta = eta.add(&third)?;
        }
    }
    Ok(eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator_algebra::Projector;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn z_partition() -> ProjectorPartition {
        ProjectorPartition::new(vec![
            Projector::from_indices(2, [0]).unwrap(),
            Projector::from_indices(2, [1]).unwrap(),
        ])
        .unwrap()
    }

    fn pauli_x() -> Operator {
        Operator::from_row_slice(2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap()
    }

    fn pauli_y() -> Operator {
        Operator::from_row_slice(2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]).unwrap()
    }

    #[test]
    fn coarse_grained_identity_and_flip() {
        let part = z_partition();
        let id = coarse_grained_exp(&part, &PhaseVector::new(vec![0.0, 0.0]).unwrap()).unwrap();
        assert!(id.distance(&Operator::identity(2)) < 1e-15);
        let flip = coarse_grained_exp(&part, &PhaseVector::new(vec![PI, 0.0]).unwrap()).unwrap();
        assert!(flip.distance(&Operator::diagonal(&[-1.0, 1.0])) < 1e-15);
    }

    #[test]
    fn coarse_grained_errors() {
        let part = z_partition();
        assert!(matches!(
            coarse_grained_exp(&part, &PhaseVector::new(vec![0.0]).unwrap()),
            Err(Error::LengthMismatch { .. })
        ));
        let partial = ProjectorPartition::new(vec![Projector::from_indices(2, [0]).unwrap()]).unwrap();
        assert!(matches!(
            coarse_grained_exp(&partial, &PhaseVector::new(vec![1.0]).unwrap()),
            Err(Error::IncompletePartition(_))
        ));
    }

    #[test]
    fn two_factor_single_phase_matches_four_terms() {
        let alpha = 0.7;
        let part = z_partition();
        let mut phases = DMatrix::zeros(2, 2);
        phases[(0, 0)] = alpha;
        let u = two_factor_exp(&part, &part, &phases).unwrap();
        let p = part.projectors()[0].operator();
        let q = part.projectors()[1].operator();
        let expected = p
            .kron(p)
            .scale(Complex64::from_polar(1.0, alpha))
            .add(&q.kron(q))
            .unwrap()
            .add(&p.kron(q))
            .unwrap()
            .add(&q.kron(p))
            .unwrap();
        assert!(u.distance(&expected) < 1e-15);
        let zero = two_factor_exp(&part, &part, &DMatrix::zeros(2, 2)).unwrap();
        assert!(zero.distance(&Operator::identity(4)) < 1e-15);
    }

    #[test]
    fn tensor_factor_trivial_cases() {
        let single = ProjectorPartition::new(vec![Projector::identity(2)]).unwrap();
        let q0 = Spectral::new(vec![0.0], single).unwrap();
        let u = tensor_factor_exp(&q0, &pauli_x()).unwrap();
        assert!(u.distance(&Operator::identity(4)) < 1e-15);

        let q = Spectral::new(vec![1.0, -1.0], z_partition()).unwrap();
        let r = Operator::diagonal(&[PI, 0.0]);
        let u = tensor_factor_exp(&q, &r).unwrap();
        assert!(u.distance(&Operator::diagonal(&[-1.0, 1.0, -1.0, 1.0])) < 1e-14);
    }

    #[test]
    fn bch_commuting_and_second_order_term() {
        let a = Operator::diagonal(&[1.0, 2.0]);
        let b = Operator::diagonal(&[-3.0, 0.5]);
        let eta = bch_eta_truncated(&a, &b, 3).unwrap();
        assert_eq!(eta, a.add(&b).unwrap());

        let a = pauli_x().scale(c(0.0, 0.3));
        let b = pauli_y().scale(c(0.0, 0.3));
        let e1 = bch_eta_truncated(&a, &b, 1).unwrap();
        let e2 = bch_eta_truncated(&a, &b, 2).unwrap();
        let half = a.commutator(&b).unwrap().scale(c(0.5, 0.0));
        assert!(e2.sub(&e1).unwrap().distance(&half) < 1e-16);
        assert_eq!(bch_eta_truncated(&a, &b, 4), Err(Error::UnsupportedOrder(4)));
    }

    #[test]
    fn bch_third_order_error_shrinks_at_least_fourth_power() {
        let err = |theta: f64| {
            let a = pauli_x().scale(c(0.0, theta));
            let b = pauli_y().scale(c(0.0, theta));
            let lhs = matrix_exp_oracle(&a).unwrap().mul(&matrix_exp_oracle(&b).unwrap()).unwrap();
            let rhs = matrix_exp_oracle(&bch_eta_truncated(&a, &b, 3).unwrap()).unwrap();
            lhs.distance(&rhs)
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        // the θ⁴ term vanishes for this Pauli pair, leaving θ⁵
        assert!((e1 / e2).log2() >= 3.8, "ratio exponent {}", (e1 / e2).log2());
    }
}
