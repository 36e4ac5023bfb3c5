//! Finite-dimensional spectral calculus on dense complex matrices.
//!
//! The identities implemented here are all instances of one fact: a function
//! of an operator that is a linear combination of mutually orthogonal
//! projectors acts block-wise on those projectors. [`matrix_exp_oracle`]
//! computes exponentials from the power series alone and is what every
//! identity is checked against.

mod expm;
mod identities;
mod logic;

pub use expm::matrix_exp_oracle;
pub use identities::{bch_eta_truncated, coarse_grained_exp, tensor_factor_exp, two_factor_exp, Spectral};
pub use logic::{projector_logic, Logic};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Frobenius tolerance for every operator identity and projector check.
pub const OPERATOR_TOL: f64 = 1e-12;

/// Dense operator on a finite-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator(DMatrix<Complex64>);

impl Operator {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        if matrix.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("operator"));
        }
        Ok(Self(matrix))
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<Complex64>) -> Self {
        Self(matrix)
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    /// Real diagonal operator.
    pub fn diagonal(values: &[f64]) -> Self {
        let d = DVector::from_iterator(values.len(), values.iter().map(|&v| Complex64::new(v, 0.0)));
        Self(DMatrix::from_diagonal(&d))
    }

    pub fn from_row_slice(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::LengthMismatch { what: "entries", expected: dim * dim, found: entries.len() });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self(&self.0 - &other.0))
    }

    pub fn mul(&self, other: &Operator) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self(&self.0 * &other.0))
    }

    /// `[self, other] = self·other − other·self`
    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self(&self.0 * &other.0 - &other.0 * &self.0))
    }

    /// Tensor product `self ⊗ other`, with `self` as the slow index.
    pub fn kron(&self, other: &Operator) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        Ok(&self.0 * v)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `self − other`.
    pub fn distance(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "distance between operators of different dimension");
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    /// ‖A − A†‖_F
    pub fn hermiticity_defect(&self) -> f64 {
        self.distance(&self.adjoint())
    }

    /// ‖U†U − I‖_F
    pub fn unitarity_defect(&self) -> f64 {
        let prod = Operator(self.0.adjoint() * &self.0);
        prod.distance(&Operator::identity(self.dim()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() < tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() < tol
    }

    fn check_dim(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct OperatorRepr {
    dim: usize,
    /// Row-major, each entry `[re, im]`.
    entries: Vec<Vec<[f64; 2]>>,
}

impl Serialize for Operator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let entries = (0..self.dim())
            .map(|r| (0..self.dim()).map(|c| [self.0[(r, c)].re, self.0[(r, c)].im]).collect())
            .collect();
        OperatorRepr { dim: self.dim(), entries }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = OperatorRepr::deserialize(deserializer)?;
        if repr.entries.len() != repr.dim || repr.entries.iter().any(|row| row.len() != repr.dim) {
            return Err(serde::de::Error::custom("operator entries do not match dim"));
        }
        let flat: Vec<Complex64> =
            repr.entries.iter().flatten().map(|[re, im]| Complex64::new(*re, *im)).collect();
        Operator::from_row_slice(repr.dim, &flat).map_err(serde::de::Error::custom)
    }
}

/// Orthogonal projector: `P² = P = P†` within [`OPERATOR_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Projector(Operator);

impl Projector {
    pub fn new(op: Operator) -> Result<Self> {
        let sq = Operator(&op.0 * &op.0);
        let idempotency = sq.distance(&op);
        let hermiticity = op.hermiticity_defect();
        if idempotency >= OPERATOR_TOL || hermiticity >= OPERATOR_TOL {
            return Err(Error::NotAProjector { idempotency, hermiticity });
        }
        Ok(Self(op))
    }

    pub(crate) fn from_operator_unchecked(op: Operator) -> Self {
        Self(op)
    }

    pub fn zero(dim: usize) -> Self {
        Self(Operator::zeros(dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Operator::identity(dim))
    }

    /// Diagonal 0/1 projector selecting the listed basis indices.
    pub fn from_indices(dim: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut diag = vec![0.0; dim];
        for i in indices {
            if i >= dim {
                return Err(Error::DimensionMismatch { expected: dim, found: i + 1 });
            }
            diag[i] = 1.0;
        }
        Ok(Self(Operator::diagonal(&diag)))
    }

    /// Orthogonal projector onto the span of `basis`, orthonormalized by
    /// modified Gram–Schmidt with one re-orthogonalization pass.
    pub fn from_basis(basis: &[DVector<Complex64>]) -> Result<Self> {
        let first = basis.first().ok_or(Error::EmptyBasis)?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        let mut ortho: Vec<DVector<Complex64>> = Vec::new();
        for (i, v) in basis.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite("basis vector"));
            }
            let norm0 = v.norm();
            if norm0 == 0.0 {
                return Err(Error::ZeroVector(i));
            }
            let mut w = v.clone();
            for _pass in 0..2 {
                for q in &ortho {
                    let c = q.dotc(&w);
                    w -= q * c;
                }
            }
            let norm = w.norm();
            // linearly dependent on earlier vectors: span unchanged
            if norm <= 1e-10 * norm0 {
                continue;
            }
            ortho.push(w / Complex64::new(norm, 0.0));
        }
        let mut p = DMatrix::<Complex64>::zeros(dim, dim);
        for q in &ortho {
            p += q * q.adjoint();
        }
        Projector::new(Operator(p))
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// `I − P`
    pub fn complement(&self) -> Projector {
        Projector(Operator(DMatrix::identity(self.dim(), self.dim()) - &self.0 .0))
    }

    /// Trace of P, rounded: the dimension of its range.
    pub fn rank(&self) -> usize {
        self.0 .0.trace().re.round() as usize
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.0.frobenius_norm() < tol
    }

    /// ‖P₁P₂‖_F
    pub fn overlap_norm(&self, other: &Projector) -> f64 {
        Operator(&self.0 .0 * &other.0 .0).frobenius_norm()
    }
}

/// `make_projector`: orthogonal projector onto the span of the given vectors.
pub fn make_projector(basis: &[DVector<Complex64>]) -> Result<Projector> {
    Projector::from_basis(basis)
}

/// Ordered family of mutually orthogonal projectors, optionally closed by a
/// trailing exterior ("ex") block.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorPartition {
    projectors: Vec<Projector>,
    has_complement: bool,
}

impl ProjectorPartition {
    /// Validates pairwise orthogonality. Completeness is checked where it is
    /// required, not here.
    pub fn new(projectors: Vec<Projector>) -> Result<Self> {
        Self::validated(projectors, false)
    }

    /// Appends `P_ex = I − ΣPₖ` so the family resolves the identity.
    pub fn with_complement(projectors: Vec<Projector>) -> Result<Self> {
        let first = projectors.first().ok_or(Error::EmptyBasis)?;
        let dim = first.dim();
        let mut sum = DMatrix::<Complex64>::zeros(dim, dim);
        for p in &projectors {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
            }
            sum += &p.0 .0;
        }
        let ex = Projector::new(Operator(DMatrix::identity(dim, dim) - sum))?;
        let mut all = projectors;
        all.push(ex);
        Self::validated(all, true)
    }

    fn validated(projectors: Vec<Projector>, has_complement: bool) -> Result<Self> {
        let first = projectors.first().ok_or(Error::EmptyBasis)?;
        let dim = first.dim();
        for (k, p) in projectors.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
            }
            for (j, q) in projectors.iter().enumerate().skip(k + 1) {
                let norm = p.overlap_norm(q);
                if norm >= OPERATOR_TOL {
                    return Err(Error::NonOrthogonal { first: k, second: j, norm });
                }
            }
        }
        Ok(Self { projectors, has_complement })
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn has_complement(&self) -> bool {
        self.has_complement
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }

    /// ‖ΣPₖ − I‖_F
    pub fn completeness_defect(&self) -> f64 {
        let dim = self.dim();
        let mut sum = DMatrix::<Complex64>::zeros(dim, dim);
        for p in &self.projectors {
            sum += &p.0 .0;
        }
        Operator(sum).distance(&Operator::identity(dim))
    }

    pub fn is_complete(&self) -> bool {
        self.completeness_defect() < OPERATOR_TOL
    }

    pub(crate) fn require_complete(&self) -> Result<()> {
        let defect = self.completeness_defect();
        if defect >= OPERATOR_TOL {
            return Err(Error::IncompletePartition(defect));
        }
        Ok(())
    }
}

/// Phases αₖ (radians), one per partition member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("phase vector"));
        }
        Ok(Self(alphas))
    }

    /// αₖ = −ηₖ·τ/ħ for an impulsive potential ηₖ acting for τ.
    pub fn from_impulse(etas: &[f64], tau: f64, hbar: f64) -> Result<Self> {
        Self::new(etas.iter().map(|eta| -eta * tau / hbar).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn vec_c(v: &[f64]) -> DVector<Complex64> {
        DVector::from_iterator(v.len(), v.iter().map(|&x| c(x, 0.0)))
    }

    #[test]
    fn axis_projector() {
        let p = make_projector(&[vec_c(&[1.0, 0.0])]).unwrap();
        assert!(p.operator().distance(&Operator::diagonal(&[1.0, 0.0])) < 1e-15);
    }

    #[test]
    fn diagonal_direction_projector() {
        let s = 1.0 / 2f64.sqrt();
        let p = make_projector(&[vec_c(&[s, s])]).unwrap();
        let expected = Operator::from_row_slice(2, &[c(0.5, 0.0); 4]).unwrap();
        assert!(p.operator().distance(&expected) < 1e-15);
    }

    #[test]
    fn plane_projector_is_idempotent() {
        let p = make_projector(&[vec_c(&[1.0, 0.0, 0.0]), vec_c(&[0.0, 1.0, 0.0])]).unwrap();
        assert!(p.operator().distance(&Operator::diagonal(&[1.0, 1.0, 0.0])) < 1e-15);
        // explicit product, independent of the constructor's own check
        let sq = p.operator().mul(p.operator()).unwrap();
        assert!(sq.distance(p.operator()) < 1e-15);
        assert_eq!(p.rank(), 2);
    }

    #[test]
    fn dependent_vectors_keep_span() {
        let p = make_projector(&[vec_c(&[1.0, 1.0]), vec_c(&[2.0, 2.0])]).unwrap();
        assert_eq!(p.rank(), 1);
    }

    #[test]
    fn projector_errors() {
        assert_eq!(make_projector(&[vec_c(&[0.0, 0.0])]), Err(Error::ZeroVector(0)));
        assert!(matches!(
            make_projector(&[vec_c(&[1.0, 0.0]), vec_c(&[1.0, 0.0, 0.0])]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(make_projector(&[]), Err(Error::EmptyBasis));
        assert!(Projector::new(Operator::diagonal(&[0.5, 1.0])).is_err());
    }

    #[test]
    fn partition_validation() {
        let p0 = Projector::from_indices(3, [0]).unwrap();
        let p1 = Projector::from_indices(3, [1]).unwrap();
        let part = ProjectorPartition::new(vec![p0.clone(), p1.clone()]).unwrap();
        assert!(!part.is_complete());
        let full = ProjectorPartition::with_complement(vec![p0.clone(), p1]).unwrap();
        assert!(full.is_complete());
        assert!(full.has_complement());
        assert_eq!(full.projectors()[2].rank(), 1);
        let overlapping = Projector::from_indices(3, [0, 1]).unwrap();
        assert!(matches!(
            ProjectorPartition::new(vec![p0, overlapping]),
            Err(Error::NonOrthogonal { first: 0, second: 1, .. })
        ));
    }

    #[test]
    fn operator_json_is_row_major_pairs() {
        let op = Operator::from_row_slice(2, &[c(1.0, 0.0), c(0.0, 2.0), c(3.0, 0.0), c(0.0, -4.0)]).unwrap();
        let json = serde_json::to_string(&op).unwrap();
        assert_eq!(json, r#"{"dim":2,"entries":[[[1.0,0.0],[0.0,2.0]],[[3.0,0.0],[0.0,-4.0]]]}"#);
        let back: Operator = serde_json::from_str(&json).unwrap();
        assert_eq!(back, op);
    }

    #[test]
    fn non_finite_operator_rejected() {
        let m = DMatrix::from_element(2, 2, c(f64::NAN, 0.0));
        assert_eq!(Operator::new(m), Err(Error::NonFinite("operator")));
    }
}
