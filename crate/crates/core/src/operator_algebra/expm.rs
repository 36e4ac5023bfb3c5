use nalgebra::DMatrix;
use num_complex::Complex64;

use super::Operator;
use crate::{Error, Result};

/// Dense matrix exponential by scaling and squaring of the Taylor series.
///
/// Deliberately knows nothing about projectors or spectra, so that it can
/// serve as the reference for the spectral identities. Relative accuracy is
/// near 1e-14 for ‖A‖ ≤ 10.
pub fn matrix_exp_oracle(a: &Operator) -> Result<Operator> {
    let m = a.matrix();
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("exponent"));
    }
    let dim = a.dim();
    let norm1 = (0..dim).map(|c| m.column(c).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    // scale until ‖A/2^s‖₁ ≤ 1/2
    let squarings = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = m * Complex64::new(0.5f64.powi(squarings), 0.0);

    let mut sum = DMatrix::<Complex64>::identity(dim, dim);
    let mut term = DMatrix::<Complex64>::identity(dim, dim);
    for k in 1..=40 {
        term = &term * &scaled * Complex64::new(1.0 / k as f64, 0.0);
        sum += &term;
        let tn: f64 = term.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if tn < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(Operator::from_matrix_unchecked(sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_gives_identity() {
        let e = matrix_exp_oracle(&Operator::zeros(3)).unwrap();
        assert_eq!(e.distance(&Operator::identity(3)), 0.0);
    }

    #[test]
    fn diagonal_phase() {
        let a = Operator::from_row_slice(2, &[c(0.0, PI), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let e = matrix_exp_oracle(&a).unwrap();
        assert!(e.distance(&Operator::diagonal(&[-1.0, 1.0])) < 1e-14);
    }

    #[test]
    fn nilpotent_truncates() {
        let a = Operator::from_row_slice(2, &[c(0.0, 0.0), c(3.0, -2.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let e = matrix_exp_oracle(&a).unwrap();
        let expected = Operator::identity(2).add(&a).unwrap();
        assert!(e.distance(&expected) < 1e-14);
    }

    #[test]
    fn large_norm_rotation() {
        // exp(iθσ_y) = cos θ I + i sin θ σ_y, with ‖A‖ = 10
        let theta = 10.0;
        let a = Operator::from_row_slice(2, &[c(0.0, 0.0), c(theta, 0.0), c(-theta, 0.0), c(0.0, 0.0)]).unwrap();
        let e = matrix_exp_oracle(&a).unwrap();
        let expected = Operator::from_row_slice(
            2,
            &[c(theta.cos(), 0.0), c(theta.sin(), 0.0), c(-theta.sin(), 0.0), c(theta.cos(), 0.0)],
        )
        .unwrap();
        assert!(e.distance(&expected) < 1e-13);
    }

    #[test]
    fn rejects_non_finite() {
        let a = Operator::from_matrix_unchecked(DMatrix::from_element(2, 2, c(f64::INFINITY, 0.0)));
        assert_eq!(matrix_exp_oracle(&a), Err(Error::NonFinite("exponent")));
    }
}
