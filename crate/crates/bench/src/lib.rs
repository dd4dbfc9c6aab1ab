//! Shared scenario builders for the criterion benchmarks.

use dephasim::{
    DistributionKind, Mode, ModelParams, MotionalDistribution, PopulationTrace, QuadratureConfig,
    SpectralDensitySpec, Temperature,
};

pub fn headline_params() -> ModelParams {
    ModelParams::new(1.0, -0.15, 0.1).unwrap()
}

pub fn coherent_dist() -> MotionalDistribution {
    MotionalDistribution::auto(DistributionKind::Coherent { nbar: 3.0 }).unwrap()
}

pub fn time_grid(count: usize) -> Vec<f64> {
    (0..count).map(|i| 40.0 * i as f64 / (count - 1) as f64).collect()
}

pub fn headline_trace(count: usize) -> PopulationTrace {
    dephasim::population_trace(
        &headline_params(),
        &SpectralDensitySpec::Flat { gamma0: 0.1 },
        Temperature::Zero,
        &coherent_dist(),
        &time_grid(count),
        &QuadratureConfig::default(),
    )
    .unwrap()
}

pub fn two_modes() -> Vec<Mode> {
    vec![
        Mode { omega: 1.0, coupling: 0.3 },
        Mode { omega: 2.3, coupling: 0.2 },
    ]
}
