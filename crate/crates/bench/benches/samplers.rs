use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dfl_bench::fixture;
use dfl_core::gibbs::{ModelConfig, Sampler, Variant};
use dfl_core::samplers::{sample_extended_gamma, sample_gig, sample_grid, sample_prior_transition, sample_stationary};
use dfl_core::{GigParams, GridPrior, RngStream, Weights};

fn scalar(c: &mut Criterion) {
    let mut rng = RngStream::new(3, 0);
    let mut group = c.benchmark_group("scalar");
    let gig = GigParams::half(2.0, 0.5).unwrap();
    group.bench_function("gig_half", |b| b.iter(|| sample_gig(black_box(gig), &mut rng)));
    group.bench_function("extended_gamma", |b| b.iter(|| sample_extended_gamma(black_box(3.0), black_box(1.5), &mut rng).unwrap()));
    let w = Weights::from_alpha_beta(0.5, 1.0).unwrap();
    group.bench_function("prior_transition", |b| b.iter(|| sample_prior_transition(black_box(0.7), &w, &mut rng).unwrap()));
    group.bench_function("stationary", |b| b.iter(|| sample_stationary(&w, &mut rng).unwrap()));
    let prior = GridPrior::beta(1.0, 10.0, 1000, 900).unwrap();
    let log_lik: Vec<f64> = prior.values().iter().map(|r| 40.0 * (1.0 - r * r).ln() + 3.0 * r.ln()).collect();
    group.bench_function("rho_grid", |b| b.iter(|| sample_grid(&prior, black_box(&log_lik), &mut rng).unwrap()));
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let data = fixture(200, 12).data;
    let mut group = c.benchmark_group("gibbs_sweep");
    group.sample_size(20);
    for variant in Variant::ALL {
        let sampler = Sampler::new(ModelConfig::new(variant)).unwrap();
        let mut state = sampler.initial_state(&data).unwrap();
        let mut rng = RngStream::new(5, 0);
        for _ in 0..50 {
            sampler.sweep(&mut state, &data, &mut rng).unwrap();
        }
        group.bench_function(BenchmarkId::new(variant.name(), "T200_p12"), |b| {
            b.iter(|| sampler.sweep(&mut state, &data, &mut rng).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, scalar, sweep);
criterion_main!(benches);
