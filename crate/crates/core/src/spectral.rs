//! Reservoir spectral densities and the dephasing kernels
//!
//! ```text
//! Q1(t) =   ∫ dω J(ω) c²(ω)/ω² · sin(ωt)
//! Q2(t) = 2 ∫ dω J(ω) c²(ω)/ω² · sin²(ωt/2) · coth(βω/2)
//! ```
//!
//! Continuum families are evaluated by adaptive quadrature; discrete mode
//! lists use the exact finite sums. The flat spectrum J c² = γ0/(2π) has the
//! closed form Q2 = γ0 t / 4 at zero temperature, which is the production
//! path; its Q1 is infrared-divergent and surfaced as an error.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadratureConfig};

/// Reservoir temperature: either exactly zero (coth factor ≡ 1) or a finite
/// inverse temperature β = 1/k_B T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Temperature {
    Zero,
    Inverse(f64),
}

impl Temperature {
    pub fn finite(beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::invalid(
                "temperature.beta",
                format!("must be > 0, got {beta}"),
            ));
        }
        Ok(Temperature::Inverse(beta))
    }

    /// coth(βω/2), or exactly 1 at zero temperature.
    pub fn coth_factor(&self, omega: f64) -> f64 {
        match self {
            Temperature::Zero => 1.0,
            Temperature::Inverse(beta) => 1.0 / (0.5 * beta * omega).tanh(),
        }
    }
}

/// A single discrete reservoir mode with frequency ω and coupling c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub omega: f64,
    pub coupling: f64,
}

/// Parametrized reservoir family, expressed through the combination
/// J(ω) c²(ω) that enters both kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpectralDensitySpec {
    /// J c² = γ0 / (2π), constant in ω.
    Flat { gamma0: f64 },
    /// J c² = α_s · ω · exp(−ω/ω_c).
    OhmicExpCutoff { strength: f64, cutoff: f64 },
    /// Finite mode list; kernels are exact sums.
    DiscreteModes { modes: Vec<Mode> },
}

impl SpectralDensitySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SpectralDensitySpec::Flat { gamma0 } => {
                if !(*gamma0 >= 0.0) {
                    return Err(Error::invalid(
                        "spectral.gamma0",
                        format!("must be >= 0, got {gamma0}"),
                    ));
                }
            }
            SpectralDensitySpec::OhmicExpCutoff { strength, cutoff } => {
                if !(*strength >= 0.0) {
                    return Err(Error::invalid(
                        "spectral.strength",
                        format!("must be >= 0, got {strength}"),
                    ));
                }
                if !(*cutoff > 0.0) {
                    return Err(Error::invalid(
                        "spectral.cutoff",
                        format!("must be > 0, got {cutoff}"),
                    ));
                }
            }
            SpectralDensitySpec::DiscreteModes { modes } => {
                if modes.is_empty() {
                    return Err(Error::invalid("spectral.modes", "must be non-empty"));
                }
                for (k, m) in modes.iter().enumerate() {
                    if !(m.omega > 0.0) {
                        return Err(Error::invalid(
                            &format!("spectral.modes[{k}].omega"),
                            format!("must be > 0, got {}", m.omega),
                        ));
                    }
                    if !m.coupling.is_finite() {
                        return Err(Error::invalid(
                            &format!("spectral.modes[{k}].coupling"),
                            "must be finite",
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Batched kernel evaluation on a time grid. `q1` entries are `None` where
/// the phase kernel is divergent for the spectral family (flat spectrum);
/// downstream code only consumes Q1 where its prefactor is nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelGrid {
    pub times: Vec<f64>,
    pub q1: Vec<Option<f64>>,
    pub q2: Vec<f64>,
}

/// Damping kernel Q2(t).
///
/// Flat spectrum at zero temperature returns γ0 t / 4 in closed form; flat at
/// finite temperature is infrared-divergent and rejected.
pub fn q2(spec: &SpectralDensitySpec, temp: Temperature, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::invalid("t", format!("must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    match spec {
        SpectralDensitySpec::Flat { gamma0 } => match temp {
            Temperature::Zero => Ok(gamma0 * t / 4.0),
            Temperature::Inverse(_) => Err(Error::InfraredDivergent {
                kernel: "Q2",
                context: " at finite temperature (integrand ~ 1/ω near 0)".into(),
            }),
        },
        SpectralDensitySpec::OhmicExpCutoff { strength, cutoff } => {
            let (alpha, wc) = (*strength, *cutoff);
            if alpha == 0.0 {
                return Ok(0.0);
            }
            // 2 α e^{−ω/ωc} sin²(ωt/2) coth(βω/2) / ω; finite at ω → 0
            let f = move |w: f64| {
                if w < 1e-12 * wc {
                    match temp {
                        Temperature::Zero => 0.5 * alpha * w * t * t,
                        Temperature::Inverse(beta) => alpha * t * t / beta,
                    }
                } else {
                    let s = (0.5 * w * t).sin();
                    2.0 * alpha * (-w / wc).exp() * s * s * temp.coth_factor(w) / w
                }
            };
            let upper = ohmic_upper_limit(wc);
            integrate(f, 0.0, upper, PI / (4.0 * t), cfg)
        }
        SpectralDensitySpec::DiscreteModes { modes } => Ok(modes
            .iter()
            .map(|m| {
                let s = (0.5 * m.omega * t).sin();
                2.0 * (m.coupling * m.coupling) / (m.omega * m.omega)
                    * s
                    * s
                    * temp.coth_factor(m.omega)
            })
            .sum()),
    }
}

/// Phase kernel Q1(t). Divergent for the flat spectrum.
pub fn q1(spec: &SpectralDensitySpec, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::invalid("t", format!("must be >= 0, got {t}")));
    }
    match spec {
        SpectralDensitySpec::Flat { .. } => Err(Error::InfraredDivergent {
            kernel: "Q1",
            context: " (integrand ~ t/ω near 0)".into(),
        }),
        SpectralDensitySpec::OhmicExpCutoff { strength, cutoff } => {
            if t == 0.0 {
                return Ok(0.0);
            }
            let (alpha, wc) = (*strength, *cutoff);
            if alpha == 0.0 {
                return Ok(0.0);
            }
            // α e^{−ω/ωc} sin(ωt) / ω → α t as ω → 0
            let f = move |w: f64| {
                if w < 1e-12 * wc {
                    alpha * t
                } else {
                    alpha * (-w / wc).exp() * (w * t).sin() / w
                }
            };
            let upper = ohmic_upper_limit(wc);
            integrate(f, 0.0, upper, PI / (4.0 * t), cfg)
        }
        SpectralDensitySpec::DiscreteModes { modes } => Ok(modes
            .iter()
            .map(|m| (m.coupling * m.coupling) / (m.omega * m.omega) * (m.omega * t).sin())
            .sum()),
    }
}

/// Truncate where the exponential envelope drops below 1e−12 of its peak.
fn ohmic_upper_limit(wc: f64) -> f64 {
    wc * (1e12f64).ln()
}

/// Evaluate both kernels on a strictly increasing time grid. Q1 values are
/// flagged unavailable (rather than erroring) for divergent families.
pub fn kernel_grid(
    spec: &SpectralDensitySpec,
    temp: Temperature,
    times: &[f64],
    cfg: &QuadratureConfig,
) -> Result<KernelGrid> {
    check_times(times)?;
    let q1_divergent = matches!(spec, SpectralDensitySpec::Flat { .. });
    let mut q1v = Vec::with_capacity(times.len());
    let mut q2v = Vec::with_capacity(times.len());
    for &t in times {
        q2v.push(q2(spec, temp, t, cfg)?);
        if q1_divergent {
            q1v.push(None);
        } else {
            q1v.push(Some(q1(spec, t, cfg)?));
        }
    }
    Ok(KernelGrid {
        times: times.to_vec(),
        q1: q1v,
        q2: q2v,
    })
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::invalid("times", "must be non-empty"));
    }
    if !(times[0] >= 0.0) {
        return Err(Error::invalid("times", "must start at t >= 0"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("times", "must be strictly increasing"));
    }
    Ok(())
}

/// Q2 by direct quadrature of the defining integral over [lo, hi], for any
/// family with a continuum kernel. Testing path only; the flat spectrum's
/// production path is the closed form.
pub fn q2_by_quadrature(
    spec: &SpectralDensitySpec,
    temp: Temperature,
    t: f64,
    lo: f64,
    hi: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let jc2: Box<dyn Fn(f64) -> f64> = match spec {
        SpectralDensitySpec::Flat { gamma0 } => {
            let g0 = *gamma0;
            Box::new(move |_| g0 / (2.0 * PI))
        }
        SpectralDensitySpec::OhmicExpCutoff { strength, cutoff } => {
            let (a, wc) = (*strength, *cutoff);
            Box::new(move |w| a * w * (-w / wc).exp())
        }
        SpectralDensitySpec::DiscreteModes { .. } => {
            return Err(Error::invalid("spec", "discrete modes have no continuum kernel"))
        }
    };
    let f = move |w: f64| {
        let s = (0.5 * w * t).sin();
        2.0 * jc2(w) / (w * w) * s * s * temp.coth_factor(w)
    };
    integrate(f, lo, hi, PI / (4.0 * t.max(1e-300)), cfg)
}
