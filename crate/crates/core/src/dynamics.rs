//! Closed-form reduced dynamics in the dressed basis.
//!
//! Every coherence between dressed states (s1, s2) evolves as
//! `ρ(t) = ρ(0) · e^{−Γ(t)} · e^{−iφ(t)}` with
//! `φ = (E1 − E2) t + [F(O1)² − F(O2)²] Q1(t)` and
//! `Γ = [F(O1) − F(O2)]² Q2(t)`. For the sign-preserving power F the phase
//! shift prefactor vanishes identically, so the lower-state population is
//!
//! `P↓(t) = ½ {1 + Σ_n p_n cos(2g√(n+1) t) e^{−4(n+1)^(2d+1) Q2(t)}}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dressed_energy, interaction_f, DressedState, ModelParams};
use crate::quad::QuadratureConfig;
use crate::spectral::{check_times, q1, q2, SpectralDensitySpec, Temperature};

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-8;
pub const MAX_AUTO_CUTOFF: usize = 200;

/// Initial motional occupation family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DistributionKind {
    Fock { n: usize },
    Coherent { nbar: f64 },
    Thermal { nbar: f64 },
}

/// Probability vector {p_n} over Fock levels 0..=N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionalDistribution {
    probabilities: Vec<f64>,
}

impl MotionalDistribution {
    /// Build a distribution truncated at `cutoff`, requiring tail mass below
    /// `tail_tol`, then renormalizing over the window.
    pub fn with_tail_tolerance(
        kind: DistributionKind,
        cutoff: usize,
        tail_tol: f64,
    ) -> Result<Self> {
        let raw: Vec<f64> = match kind {
            DistributionKind::Fock { n } => {
                if n > cutoff {
                    return Err(Error::invalid(
                        "distribution.n",
                        format!("Fock level {n} exceeds cutoff {cutoff}"),
                    ));
                }
                let mut p = vec![0.0; cutoff + 1];
                p[n] = 1.0;
                p
            }
            DistributionKind::Coherent { nbar } => {
                if !(nbar >= 0.0) {
                    return Err(Error::invalid("distribution.nbar", "must be >= 0"));
                }
                // p_n = e^{-n̄} n̄^n / n!, built by recurrence
                let mut p = Vec::with_capacity(cutoff + 1);
                let mut term = (-nbar).exp();
                for n in 0..=cutoff {
                    p.push(term);
                    term *= nbar / (n + 1) as f64;
                }
                p
            }
            DistributionKind::Thermal { nbar } => {
                if !(nbar >= 0.0) {
                    return Err(Error::invalid("distribution.nbar", "must be >= 0"));
                }
                if nbar == 0.0 {
                    let mut p = vec![0.0; cutoff + 1];
                    p[0] = 1.0;
                    p
                } else {
                    let ratio = nbar / (1.0 + nbar);
                    let mut p = Vec::with_capacity(cutoff + 1);
                    let mut term = 1.0 / (1.0 + nbar);
                    for _ in 0..=cutoff {
                        p.push(term);
                        term *= ratio;
                    }
                    p
                }
            }
        };
        let mass: f64 = raw.iter().sum();
        let tail = (1.0 - mass).max(0.0);
        if tail >= tail_tol {
            return Err(Error::InsufficientCutoff {
                cutoff,
                tail,
                tolerance: tail_tol,
            });
        }
        let probabilities = raw.iter().map(|p| p / mass).collect();
        Ok(MotionalDistribution { probabilities })
    }

    pub fn new(kind: DistributionKind, cutoff: usize) -> Result<Self> {
        Self::with_tail_tolerance(kind, cutoff, DEFAULT_TAIL_TOLERANCE)
    }

    /// Smallest cutoff with tail mass below the default tolerance, capped at
    /// [`MAX_AUTO_CUTOFF`].
    pub fn auto(kind: DistributionKind) -> Result<Self> {
        if let DistributionKind::Fock { n } = kind {
            return Self::new(kind, n);
        }
        let mut cutoff = 4;
        loop {
            match Self::new(kind, cutoff) {
                Ok(d) => return Ok(d),
                Err(Error::InsufficientCutoff { .. }) if cutoff < MAX_AUTO_CUTOFF => {
                    cutoff = (cutoff * 2).min(MAX_AUTO_CUTOFF);
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Construct directly from a probability vector (used when parsing traces
    /// back from disk). Must be near-normalized.
    pub fn from_probabilities(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::invalid("distribution", "must be non-empty"));
        }
        if probabilities.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::invalid("distribution", "probabilities must be >= 0"));
        }
        let mass: f64 = probabilities.iter().sum();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                "distribution",
                format!("probabilities must sum to 1 (got {mass})"),
            ));
        }
        Ok(MotionalDistribution { probabilities })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn cutoff(&self) -> usize {
        self.probabilities.len() - 1
    }
}

/// Phase and damping exponent of one dressed coherence at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceFactor {
    /// Dynamical plus shift phase φ + δφ (radians).
    pub phase: f64,
    /// Damping exponent Γ ≥ 0.
    pub damping: f64,
}

/// Phase and damping of the (s1, s2) coherence at time `t`.
///
/// Q1 is only evaluated when the shift prefactor F(O1)² − F(O2)² is nonzero,
/// so divergent-Q1 families are usable whenever the shift cancels.
pub fn coherence_factor(
    s1: DressedState,
    s2: DressedState,
    params: &ModelParams,
    spec: &SpectralDensitySpec,
    temp: Temperature,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<CoherenceFactor> {
    let f1 = interaction_f(s1.op_eigenvalue(), params.d);
    let f2 = interaction_f(s2.op_eigenvalue(), params.d);

    let mut phase = (dressed_energy(s1, params) - dressed_energy(s2, params)) * t;
    let shift_prefactor = f1 * f1 - f2 * f2;
    if shift_prefactor != 0.0 {
        phase += shift_prefactor * q1(spec, t, cfg)?;
    }

    let damp_prefactor = (f1 - f2) * (f1 - f2);
    let damping = if damp_prefactor == 0.0 {
        0.0
    } else {
        damp_prefactor * q2(spec, temp, t, cfg)?
    };
    Ok(CoherenceFactor { phase, damping })
}

/// Propagate a single reduced-density-matrix element from its initial value.
pub fn rho_element(
    s1: DressedState,
    s2: DressedState,
    rho0: Complex64,
    params: &ModelParams,
    spec: &SpectralDensitySpec,
    temp: Temperature,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<Complex64> {
    let cf = coherence_factor(s1, s2, params, spec, temp, t, cfg)?;
    Ok(rho0 * (-cf.damping).exp() * Complex64::new(0.0, -cf.phase).exp())
}

/// A sampled P↓(t) series together with the inputs that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationTrace {
    pub times: Vec<f64>,
    pub p_down: Vec<f64>,
    pub params: ModelParams,
    pub spectral: SpectralDensitySpec,
    pub temperature: Temperature,
    pub distribution: MotionalDistribution,
}

/// Synthesize the lower-state population on a time grid.
pub fn population_trace(
    params: &ModelParams,
    spec: &SpectralDensitySpec,
    temp: Temperature,
    dist: &MotionalDistribution,
    times: &[f64],
    cfg: &QuadratureConfig,
) -> Result<PopulationTrace> {
    check_times(times)?;
    spec.validate()?;
    let mut q2_values = Vec::with_capacity(times.len());
    for &t in times {
        q2_values.push(q2(spec, temp, t, cfg)?);
    }
    let p_down = population_from_kernels(params, dist, times, &q2_values, None);
    Ok(PopulationTrace {
        times: times.to_vec(),
        p_down,
        params: *params,
        spectral: spec.clone(),
        temperature: temp,
        distribution: dist.clone(),
    })
}

/// P↓ samples from precomputed kernel values. `q1_values` may be anything
/// (including a deliberately wrong injection): it only enters through the
/// shift prefactor F(O1)² − F(O2)², which is exactly zero for the odd power,
/// and is skipped entirely when the prefactor vanishes. Terms are accumulated
/// in ascending n so the sum is reproducible bit-for-bit.
pub fn population_from_kernels(
    params: &ModelParams,
    dist: &MotionalDistribution,
    times: &[f64],
    q2_values: &[f64],
    q1_values: Option<&[f64]>,
) -> Vec<f64> {
    assert_eq!(times.len(), q2_values.len());
    let mut p_down = Vec::with_capacity(times.len());
    for (j, &t) in times.iter().enumerate() {
        let q2_t = q2_values[j];
        let q1_t = q1_values.map(|v| v[j]);
        let mut sum = 0.0;
        for (n, &p) in dist.probabilities().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let root = ((n + 1) as f64).sqrt();
            let f1 = interaction_f(root, params.d);
            let f2 = interaction_f(-root, params.d);
            let shift_prefactor = f1 * f1 - f2 * f2;
            let shift = if shift_prefactor == 0.0 {
                0.0
            } else {
                shift_prefactor * q1_t.unwrap_or(0.0)
            };
            let phase = 2.0 * params.g * root * t + shift;
            let damping = (f1 - f2) * (f1 - f2) * q2_t;
            sum += p * phase.cos() * (-damping).exp();
        }
        // |Σ p_n cos(·) e^{-Γ}| ≤ 1 analytically; clamp roundoff spill
        p_down.push((0.5 * (1.0 + sum)).clamp(0.0, 1.0));
    }
    p_down
}
