use std::f64::consts::FRAC_1_SQRT_2;

use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use stochbohm::grid_field::{
    apply_piecewise_impulse, apply_sg_deflection, coincidence_report, extended_impulsive_evolve, free_propagate,
    momentum_expectation, position_expectation, position_spread, synthesize_packets, GridSpec, PacketParams, Region,
    SgDeflection,
};
use stochbohm::{Error, Units};

fn line() -> GridSpec {
    GridSpec::line(-64.0, 128.0, 2048).unwrap()
}

#[test]
fn free_packet_moves_and_spreads_as_expected() {
    let units = Units { hbar: 0.7, mass: 1.3 };
    let (x0, p, s0, t) = (-10.0, 1.1, 1.2, 6.0);
    let psi = synthesize_packets(&line(), 1, &[PacketParams::new(x0, s0).with_momentum(p)], units).unwrap();
    let later = free_propagate(&psi, t, units).unwrap();
    assert_abs_diff_eq!(position_expectation(&later)[0], x0 + p * t / units.mass, epsilon = 1e-9);
    assert_abs_diff_eq!(momentum_expectation(&later, units.hbar)[0], p, epsilon = 1e-9);
    let spread = s0 * (1.0 + (units.hbar * t / (2.0 * units.mass * s0 * s0)).powi(2)).sqrt();
    assert_abs_diff_eq!(position_spread(&later, 0), spread, epsilon = 1e-8);
    assert_abs_diff_eq!(later.norm_sqr(), 1.0, epsilon = 1e-12);
}

#[test]
fn propagation_composes() {
    let psi = synthesize_packets(&line(), 1, &[PacketParams::new(3.0, 1.0).with_momentum(-0.5)], Units::default()).unwrap();
    let u = Units::default();
    let two = free_propagate(&free_propagate(&psi, 1.5, u).unwrap(), 2.5, u).unwrap();
    let one = free_propagate(&psi, 4.0, u).unwrap();
    assert!(two.l2_distance(&one).unwrap() < 1e-12);
}

#[test]
fn stern_gerlach_deflection_splits_components() {
    let u = Units::default();
    let w = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let psi = synthesize_packets(
        &line(),
        2,
        &[PacketParams::new(0.0, 2.0).with_weight(w), PacketParams::new(0.0, 2.0).with_weight(w).in_component(1)],
        u,
    )
    .unwrap();
    let kicked = apply_sg_deflection(&psi, &SgDeflection::for_spin(0.3, 1.5, 0, 2).unwrap(), u).unwrap();
    let up = kicked.extract_component(0).unwrap();
    let down = kicked.extract_component(1).unwrap();
    assert_abs_diff_eq!(momentum_expectation(&up, 1.0)[0], 1.5, epsilon = 1e-9);
    assert_abs_diff_eq!(momentum_expectation(&down, 1.0)[0], -1.5, epsilon = 1e-9);
    // spin weights are untouched
    assert_abs_diff_eq!(up.norm_sqr(), 0.5, epsilon = 1e-12);
}

#[test]
fn impulse_phases_follow_boxes() {
    let u = Units::default();
    let region = Region::intervals(&[-20.0, 0.0, 20.0], ["L", "R"]).unwrap();
    let w = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let psi = synthesize_packets(&line(), 1, &[PacketParams::new(-10.0, 1.0).with_weight(w), PacketParams::new(10.0, 1.0).with_weight(w)], u)
        .unwrap();
    let out = apply_piecewise_impulse(&psi, &region, &[2.0, -1.0], 0.5, u).unwrap();
    let grid = psi.grid();
    for i in (0..grid.len()).step_by(7) {
        let x = grid.point(i)[0];
        let expected = if (-20.0..0.0).contains(&x) { -1.0 } else if (0.0..20.0).contains(&x) { 0.5 } else { 0.0 };
        if psi.amplitudes()[i].norm() > 1e-6 {
            let phase = (out.amplitudes()[i] / psi.amplitudes()[i]).arg();
            assert_abs_diff_eq!(phase, expected, epsilon = 1e-12);
        }
    }
}

#[test]
fn coincidence_gate() {
    let u = Units::default();
    let region = Region::intervals(&[-20.0, 0.0, 20.0], ["L", "R"]).unwrap();
    let inside = synthesize_packets(&line(), 1, &[PacketParams::new(-10.0, 1.0)], u).unwrap();
    assert!(coincidence_report(&inside, &region).unwrap().pass);
    let edge = synthesize_packets(&line(), 1, &[PacketParams::new(0.0, 1.0)], u).unwrap();
    let report = coincidence_report(&edge, &region).unwrap();
    assert!(!report.pass);
    let err = extended_impulsive_evolve(&edge, &region, &[1.0, 2.0], 0.5, u).unwrap_err();
    assert!(matches!(err, Error::CoincidenceViolation(_)));
}

#[test]
fn misaligned_region_is_rejected() {
    let region = Region::intervals(&[-20.01, 0.0], ["L"]).unwrap();
    assert!(matches!(region.assign(&line()), Err(Error::MisalignedRegion { .. })));
}
