use stochbohm::bohmian::{
    equivariance_distance, integrate_ensemble, ks_critical_1pct, sample_quantum_equilibrium, EnsembleSpec, FieldHistory,
    IntegrationOptions, Side, Timeline,
};
use stochbohm::grid_field::{synthesize_packets, GridSpec, PacketParams};
use stochbohm::{Execution, Units};

#[test]
fn free_gaussian_trajectories_scale_with_the_width() {
    // x(t) = x_c(t) + (x₀ − x_c(0))·σ(t)/σ₀ for a free Gaussian packet
    let units = Units::default();
    let grid = GridSpec::line(-48.0, 96.0, 1024).unwrap();
    let (xc, p, s0, t_end) = (-4.0, 0.8, 1.0, 5.0);
    let psi = synthesize_packets(&grid, 1, &[PacketParams::new(xc, s0).with_momentum(p)], units).unwrap();
    let starts = sample_quantum_equilibrium(&psi, &EnsembleSpec::new(200, 9), Execution::Parallel).unwrap();
    let history = Timeline::new(psi.clone(), units);
    let run = integrate_ensemble(&history, &starts, 0.0, t_end, &IntegrationOptions::default()).unwrap();
    assert_eq!(run.flagged, 0);
    let scale = (1.0 + (t_end / (2.0 * s0 * s0)).powi(2)).sqrt();
    let worst = starts
        .iter()
        .zip(&run.trajectories)
        .map(|(x0, tr)| (tr.last_position()[0] - (xc + p * t_end + (x0[0] - xc) * scale)).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn sequential_and_parallel_runs_agree_bitwise() {
    let units = Units::default();
    let grid = GridSpec::line(-32.0, 64.0, 512).unwrap();
    let psi = synthesize_packets(&grid, 1, &[PacketParams::new(0.0, 1.5).with_momentum(1.0)], units).unwrap();
    let history = Timeline::new(psi.clone(), units);
    let mut out = Vec::new();
    for exec in [Execution::Sequential, Execution::Parallel] {
        let starts = sample_quantum_equilibrium(&psi, &EnsembleSpec::new(300, 4), exec).unwrap();
        let opts = IntegrationOptions { execution: exec, ..IntegrationOptions::default() };
        out.push(integrate_ensemble(&history, &starts, 0.0, 2.0, &opts).unwrap());
    }
    assert_eq!(out[0], out[1]);
}

#[test]
fn equilibrium_sample_passes_ks() {
    let units = Units::default();
    let grid = GridSpec::line(-32.0, 64.0, 1024).unwrap();
    let psi = synthesize_packets(
        &grid,
        1,
        &[PacketParams::new(-5.0, 1.0), PacketParams::new(4.0, 2.0).with_momentum(0.5)],
        units,
    )
    .unwrap();
    let starts = sample_quantum_equilibrium(&psi, &EnsembleSpec::new(5000, 11), Execution::Parallel).unwrap();
    assert!(equivariance_distance(&psi, &starts) < ks_critical_1pct(5000));
    // shifted samples are detected
    let shifted: Vec<_> = starts.iter().map(|x| [x[0] + 0.5, x[1]]).collect();
    assert!(equivariance_distance(&psi, &shifted) > ks_critical_1pct(5000));
    let history = Timeline::new(psi.clone(), units);
    assert!(history.field_at(0.0, Side::After).unwrap().l2_distance(&psi).unwrap() < 1e-15);
}
