use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use stochbohm::stochastic::{
    decoherence_matrix, overbar_average, phase_average_matrix, Marginal, Method, ParamDensity, PointerModel,
};
use stochbohm::Execution;

fn gaussian(mean: f64, std: f64) -> Marginal {
    Marginal::Gaussian { mean, std }
}

#[test]
fn monte_carlo_agrees_with_quadrature() {
    let density = ParamDensity::independent(
        vec![Marginal::Uniform { lower: 0.0, upper: 3.0 }, gaussian(1.0, 0.5)],
        Marginal::Uniform { lower: -1.0, upper: 1.0 },
    );
    let f = |p: &stochbohm::stochastic::StochasticParams| Complex64::from_polar(1.0, p.etas[0] - 2.0 * p.etas[1] + p.y);
    let q = overbar_average(f, &density, Method::default(), Execution::Parallel).unwrap();
    let mc = overbar_average(f, &density, Method::MonteCarlo { samples: 40_000, seed: 5 }, Execution::Parallel).unwrap();
    assert!((q.value - mc.value).norm() < 4.0 * mc.std_error.max(1e-3), "{} vs {}", q.value, mc.value);
    // E[e^{iη₀}] E[e^{-2iη₁}] E[e^{iy}]
    let e0 = (Complex64::from_polar(1.0, 3.0) - 1.0) / Complex64::new(0.0, 3.0);
    let e1 = Complex64::from_polar((-2.0f64 * 0.25).exp(), -2.0);
    let ey = Complex64::new(1.0f64.sin(), 0.0);
    let expected = e0 * e1 * ey;
    assert!((q.value - expected).norm() < 1e-10, "{} vs {expected}", q.value);
}

#[test]
fn off_diagonals_shrink_with_the_spread() {
    let model = PointerModel::new(1.0, 2.0).unwrap();
    let tau = 0.5;
    let mut last = f64::INFINITY;
    for std in [0.1, 0.3, 1.0, 3.0, 10.0] {
        let d = ParamDensity::independent(vec![gaussian(0.0, std), gaussian(1.0, std)], Marginal::Fixed { value: 0.0 });
        let m = decoherence_matrix(&model, &d, tau, Method::default(), Execution::Parallel).unwrap();
        let off = m.max_off_diagonal();
        assert!(off < last, "std {std}: {off} !< {last}");
        last = off;
        assert_abs_diff_eq!(m.get(0, 0).re, 1.0, epsilon = 1e-12);
    }
    assert!(last < 1e-2);
}

#[test]
fn phase_average_over_a_full_period_vanishes() {
    let tau = 0.4;
    let period = Marginal::Uniform { lower: 0.0, upper: 2.0 * PI / tau };
    let d = ParamDensity::independent(vec![period; 3], Marginal::Fixed { value: 0.0 });
    let m = phase_average_matrix(&d, tau, 1.0, Method::default(), Execution::Parallel).unwrap();
    assert!(m.max_off_diagonal() < 1e-12);
    let common = ParamDensity::common(3, period, Marginal::Fixed { value: 0.0 });
    let m = phase_average_matrix(&common, tau, 1.0, Method::default(), Execution::Parallel).unwrap();
    assert_abs_diff_eq!(m.max_off_diagonal(), 1.0, epsilon = 1e-12);
}
