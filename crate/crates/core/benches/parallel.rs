use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use stochbohm::bohmian::{integrate_ensemble, sample_quantum_equilibrium, EnsembleSpec, IntegrationOptions, Timeline};
use stochbohm::grid_field::{synthesize_packets, GridSpec, PacketParams};
use stochbohm::stochastic::{decoherence_matrix, overbar_average, Marginal, Method, ParamDensity, PointerModel};
use stochbohm::{Execution, Units};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn ensemble(c: &mut Criterion) {
    let units = Units::default();
    let grid = GridSpec::line(-32.0, 64.0, 1024).unwrap();
    let psi = synthesize_packets(&grid, 1, &[PacketParams::new(-4.0, 1.0).with_momentum(1.0)], units).unwrap();
    let history = Timeline::new(psi.clone(), units);
    let starts = sample_quantum_equilibrium(&psi, &EnsembleSpec::new(2000, 1), Execution::Parallel).unwrap();
    let mut g = c.benchmark_group("ensemble_2000");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = IntegrationOptions { execution: exec, ..IntegrationOptions::default() };
        g.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, o| {
            b.iter(|| black_box(integrate_ensemble(&history, &starts, 0.0, 2.0, o).unwrap()))
        });
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let density = ParamDensity::independent(
        vec![Marginal::Uniform { lower: 0.0, upper: 6.0 }, Marginal::Gaussian { mean: 0.0, std: 1.0 }],
        Marginal::Uniform { lower: -0.5, upper: 0.5 },
    );
    let method = Method::MonteCarlo { samples: 200_000, seed: 3 };
    let mut g = c.benchmark_group("monte_carlo_200k");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| {
                black_box(
                    overbar_average(|p| Complex64::from_polar(1.0, p.etas[0] * p.etas[1] + p.y), &density, method, exec)
                        .unwrap(),
                )
            })
        });
    }
    g.finish();
}

fn decoherence(c: &mut Criterion) {
    let tau = 0.5;
    let period = Marginal::Uniform { lower: 0.0, upper: 4.0 * std::f64::consts::PI };
    let density = ParamDensity::independent(vec![period; 4], Marginal::Uniform { lower: -0.5, upper: 0.5 });
    let model = PointerModel::new(1.0, 20.0).unwrap();
    let mut g = c.benchmark_group("decoherence_quadrature");
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| black_box(decoherence_matrix(&model, &density, tau, Method::default(), exec).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, ensemble, monte_carlo, decoherence);
criterion_main!(benches);
