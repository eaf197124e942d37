use std::f64::consts::{FRAC_PI_2, PI, TAU};

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use mechfringe_core::montecarlo::{run_ensemble, DriveConfig, EnsembleOptions};
use mechfringe_core::tracefit::{fit_trace, initial_guess, synthesize_trace, FitOptions, GuessOptions, KnownParams, TraceModelParams, TraceTiming};
use mechfringe_core::twoport::{herald_probability_quadrature, upsilon, ClickEvent};
use mechfringe_core::wigner::{wigner_transform, ConditionalState, DensityKernel, GridSpec};
use mechfringe_core::{CouplingConfig, Measurement, ThermalState, Unit};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn operators(c: &mut Criterion) {
    let cfg = CouplingConfig::new(1.0, FRAC_PI_2, 0.5).unwrap();
    let ev = ClickEvent::new(2, 1);
    c.bench_function("upsilon x1000", |b| {
        b.iter(|| (0..1000).map(|k| upsilon(ev, &cfg, black_box(k as f64 * 0.01 - 5.0)).re).sum::<f64>())
    });
    let thermal = ThermalState::new(4.0).unwrap();
    c.bench_function("herald quadrature", |b| b.iter(|| herald_probability_quadrature(ev, &cfg, black_box(&thermal)).unwrap()));
}

fn wigner(c: &mut Criterion) {
    let cfg = CouplingConfig::new(1.5, PI, 0.5).unwrap();
    let state = ConditionalState::new(Measurement::Noon(3), &cfg, 1.0).unwrap();
    let spec = GridSpec::for_state(&state, 256, 256);
    let kernel = DensityKernel::from_fn(&spec.grid_x(), |x, xp| state.kernel(x, xp)).unwrap();
    let grid_p = spec.grid_p();
    let mut group = c.benchmark_group("wigner");
    group.sample_size(10);
    group.bench_function("transform 256", |b| b.iter(|| wigner_transform(black_box(&kernel), &grid_p).unwrap()));
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let cfg = CouplingConfig::new(1.0, FRAC_PI_2, 0.5).unwrap();
    let drive = DriveConfig::new(PI, Unit::QuantumNoise, 1).unwrap();
    let mut group = c.benchmark_group("montecarlo");
    group.sample_size(10);
    group.bench_function("{1,1} 10k points", |b| {
        b.iter(|| run_ensemble(Measurement::TwoPort(ClickEvent::new(1, 1)), &cfg, &drive, 10_000, &EnsembleOptions::default()).unwrap())
    });
    group.finish();
}

fn fitting(c: &mut Criterion) {
    let truth = TraceModelParams { a: 1.0, c: 0.0, omega_m: TAU * 105.64e3, x: 1.3, p: -2.1, phi_r: 0.7, d: 0.1, offset_modulated: true };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let trace = synthesize_trace(&truth, 0.01, &TraceTiming::default(), &mut rng).unwrap();
    let known = KnownParams::from(&truth);
    let mut group = c.benchmark_group("tracefit");
    group.sample_size(20);
    group.bench_function("guess + fit", |b| {
        b.iter(|| {
            let g = initial_guess(black_box(&trace), &known, &GuessOptions::default()).unwrap();
            fit_trace(&trace, &known, &g, &FitOptions::default()).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, operators, wigner, sampling, fitting);
criterion_main!(benches);
