use criterion::{black_box, criterion_group, criterion_main, Criterion};

use dephasim::{
    brute_force_r, fit_full_model, CounterTerm, DressedState, FiniteReservoirSpec, FitOptions,
    QuadratureConfig, SpectralDensitySpec, Temperature,
};
use dephasim_bench::{coherent_dist, headline_params, headline_trace, time_grid, two_modes};

fn bench_population_trace(c: &mut Criterion) {
    let params = headline_params();
    let spec = SpectralDensitySpec::Flat { gamma0: 0.1 };
    let dist = coherent_dist();
    let times = time_grid(1000);
    let cfg = QuadratureConfig::default();
    c.bench_function("population_trace/coherent-nbar3-1000pts", |b| {
        b.iter(|| {
            dephasim::population_trace(
                black_box(&params),
                &spec,
                Temperature::Zero,
                &dist,
                &times,
                &cfg,
            )
            .unwrap()
        })
    });
}

fn bench_ohmic_kernel(c: &mut Criterion) {
    let spec = SpectralDensitySpec::OhmicExpCutoff { strength: 0.05, cutoff: 5.0 };
    let times = time_grid(200);
    let cfg = QuadratureConfig::default();
    c.bench_function("q2/ohmic-beta2-200pts", |b| {
        b.iter(|| {
            dephasim::kernel_grid(
                black_box(&spec),
                Temperature::finite(2.0).unwrap(),
                &times,
                &cfg,
            )
            .unwrap()
        })
    });
}

fn bench_brute_force_oracle(c: &mut Criterion) {
    let params = headline_params();
    let reservoir = FiniteReservoirSpec::new(two_modes(), 30, Temperature::Zero).unwrap();
    let s1 = DressedState::new(1, 1).unwrap();
    let s2 = DressedState::new(1, 2).unwrap();
    c.bench_function("brute_force_r/two-modes-cutoff30", |b| {
        b.iter(|| {
            brute_force_r(s1, s2, &params, &reservoir, black_box(2.5), CounterTerm::OmegaLinear)
                .unwrap()
        })
    });
}

fn bench_fit(c: &mut Criterion) {
    let trace = headline_trace(1000);
    let dist = coherent_dist();
    let opts = FitOptions::default();
    c.bench_function("fit_full_model/coherent-nbar3-1000pts", |b| {
        b.iter(|| fit_full_model(black_box(&trace), &dist, 1.0, &opts).unwrap())
    });
}

criterion_group!(
    benches,
    bench_population_trace,
    bench_ohmic_kernel,
    bench_brute_force_oracle,
    bench_fit
);
criterion_main!(benches);
