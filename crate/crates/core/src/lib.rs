//! Exactly solvable dressed-state dephasing of a trapped ion driven on the
//! first blue sideband, with a nonlinear system-reservoir coupling
//! F(O) = sign(O)|O|^(2d+1).
//!
//! The crate provides:
//!
//! - [`model`]: dressed-state algebra and the nonlinear interaction function;
//! - [`spectral`]: reservoir spectral densities and the dephasing kernels
//!   Q1/Q2, with an analytic fast path for the flat spectrum;
//! - [`dynamics`]: closed-form coherence evolution and synthesis of the
//!   lower-state population P↓(t), which decays per level as
//!   γ_n = γ0 (n+1)^(2d+1);
//! - [`oracle`]: brute-force finite-mode evolution for checking the closed
//!   form and the displacement-operator identities behind it;
//! - [`fit`]: damped-cosine least squares recovering {γ_n} and the power-law
//!   exponent ν from a trace;
//! - [`config`] and [`io`]: run configuration and deterministic CSV/JSON
//!   interchange formats.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod io;
pub mod model;
pub mod oracle;
pub mod quad;
pub mod spectral;

pub use config::{parse_config, RunConfig, RunMode};
pub use dynamics::{
    coherence_factor, population_trace, rho_element, CoherenceFactor, DistributionKind,
    MotionalDistribution, PopulationTrace,
};
pub use error::{Error, Result};
pub use fit::{fit_decay_rates, fit_full_model, fit_power_law, DecayRateFit, FitOptions, RateEstimate};
pub use model::{
    damping_coefficient, dressed_energy, interaction_f, DressedState, ModelParams,
};
pub use oracle::{
    brute_force_r, closed_form_r, displacement_matrix, thermal_density, verify_trace_identity,
    CounterTerm, FiniteReservoirSpec,
};
pub use quad::QuadratureConfig;
pub use spectral::{kernel_grid, q1, q2, KernelGrid, Mode, SpectralDensitySpec, Temperature};
