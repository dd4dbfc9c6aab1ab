//! Inverse problem: recover per-level decay rates {γ_n} from a sampled
//! population trace, then regress the power-law exponent ν of
//! γ_n = γ0 (n+1)^ν on log-log axes.
//!
//! The trace model is
//! `P↓(t) = ½ {1 + Σ_n p_n cos(2g√(n+1) t) e^{−γ_n t}}` with the component
//! frequencies held fixed at 2g√(n+1); only the rates are free. The
//! least-squares problem is solved by damped Gauss-Newton with an analytic
//! Jacobian and a multiplicative trust parameter (×2 on reject, ÷3 on
//! accept); rates are projected to γ ≥ 0 after each step.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{MotionalDistribution, PopulationTrace};
use crate::error::{Error, Result};

/// One fitted decay rate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub n: usize,
    pub rate: f64,
    pub stderr: f64,
}

/// Combined result of the rate fit and the power-law regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRateFit {
    pub gamma_n: Vec<RateEstimate>,
    pub gamma0_hat: f64,
    pub nu_hat: f64,
    pub residual_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Components with initial weight below this are excluded from the fit.
    pub p_min: f64,
    pub max_iterations: usize,
    /// Stop when the relative cost decrease falls below this.
    pub cost_tolerance: f64,
    /// Stop when the largest parameter step falls below this.
    pub step_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            p_min: 0.01,
            max_iterations: 200,
            cost_tolerance: 1e-14,
            step_tolerance: 1e-12,
        }
    }
}

struct Problem<'a> {
    times: &'a [f64],
    values: &'a [f64],
    /// (n, p_n, 2g√(n+1)) per active component.
    components: Vec<(usize, f64, f64)>,
}

impl Problem<'_> {
    fn model_at(&self, gammas: &DVector<f64>, j: usize) -> f64 {
        let t = self.times[j];
        let mut sum = 0.0;
        for (k, &(_, p, freq)) in self.components.iter().enumerate() {
            sum += p * (freq * t).cos() * (-gammas[k] * t).exp();
        }
        0.5 * (1.0 + sum)
    }

    fn residuals(&self, gammas: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.times.len(),
            (0..self.times.len()).map(|j| self.model_at(gammas, j) - self.values[j]),
        )
    }

    fn jacobian(&self, gammas: &DVector<f64>) -> DMatrix<f64> {
        let m = self.times.len();
        let p = self.components.len();
        let mut jac = DMatrix::zeros(m, p);
        for j in 0..m {
            let t = self.times[j];
            for (k, &(_, pn, freq)) in self.components.iter().enumerate() {
                jac[(j, k)] = -0.5 * pn * t * (freq * t).cos() * (-gammas[k] * t).exp();
            }
        }
        jac
    }
}

/// Rough rate scale from the log-envelope of |2P↓ − 1|: least-squares slope
/// of ln(local maxima) against time, attributed to the strongest component.
fn initial_rate_scale(times: &[f64], values: &[f64], strongest_n: usize) -> f64 {
    let signal: Vec<f64> = values.iter().map(|p| (2.0 * p - 1.0).abs()).collect();
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for j in 1..signal.len().saturating_sub(1) {
        if signal[j] > signal[j - 1] && signal[j] >= signal[j + 1] && signal[j] > 1e-6 {
            peaks.push((times[j], signal[j].ln()));
        }
    }
    let fallback = 0.5 / times.last().copied().unwrap_or(1.0).max(1e-300);
    if peaks.len() < 2 {
        return fallback;
    }
    let m = peaks.len() as f64;
    let sx: f64 = peaks.iter().map(|p| p.0).sum();
    let sy: f64 = peaks.iter().map(|p| p.1).sum();
    let sxx: f64 = peaks.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = peaks.iter().map(|p| p.0 * p.1).sum();
    let denom = m * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return fallback;
    }
    let slope = (m * sxy - sx * sy) / denom;
    let gamma_strongest = (-slope).max(0.0);
    (gamma_strongest / (strongest_n + 1) as f64).max(1e-8)
}

/// Fit {γ_n} for every component with p_n above the weight threshold.
pub fn fit_decay_rates(
    trace: &PopulationTrace,
    dist: &MotionalDistribution,
    g: f64,
    opts: &FitOptions,
) -> Result<Vec<RateEstimate>> {
    fit_decay_rates_raw(&trace.times, &trace.p_down, dist, g, opts)
}

/// Same as [`fit_decay_rates`], on bare sample arrays.
pub fn fit_decay_rates_raw(
    times: &[f64],
    values: &[f64],
    dist: &MotionalDistribution,
    g: f64,
    opts: &FitOptions,
) -> Result<Vec<RateEstimate>> {
    if times.len() != values.len() || times.len() < 3 {
        return Err(Error::invalid("trace", "need at least 3 aligned samples"));
    }
    if !(g > 0.0) {
        return Err(Error::invalid("g", "must be > 0"));
    }
    let components: Vec<(usize, f64, f64)> = dist
        .probabilities()
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > opts.p_min)
        .map(|(n, &p)| (n, p, 2.0 * g * ((n + 1) as f64).sqrt()))
        .collect();
    if components.is_empty() {
        return Err(Error::IllConditionedFit(
            "no component has weight above p_min".into(),
        ));
    }
    // √(n+1) are pairwise distinct, but guard against a degenerate grid
    for w in components.windows(2) {
        if (w[1].2 - w[0].2).abs() < 1e-12 {
            return Err(Error::IllConditionedFit(
                "two components with near-identical frequency".into(),
            ));
        }
    }

    let problem = Problem {
        times,
        values,
        components: components.clone(),
    };

    let strongest = components
        .iter()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap()
        .0;
    let rate_scale = initial_rate_scale(times, values, strongest);
    let mut gammas = DVector::from_iterator(
        components.len(),
        components.iter().map(|&(n, _, _)| rate_scale * (n + 1) as f64),
    );

    let mut cost = problem.residuals(&gammas).norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;

    for _ in 0..opts.max_iterations {
        let r = problem.residuals(&gammas);
        let jac = problem.jacobian(&gammas);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;

        // projected-gradient stationarity: at γ_k = 0 only a descent
        // direction into the feasible region counts
        let pg = (0..gammas.len())
            .map(|k| {
                if gammas[k] > 0.0 {
                    grad[k].abs()
                } else {
                    (-grad[k]).max(0.0)
                }
            })
            .fold(0.0f64, f64::max);
        if pg < 1e-10 * (1.0 + cost) {
            converged = true;
            break;
        }

        let mut accepted = false;
        for _ in 0..40 {
            let mut damped = jtj.clone();
            for k in 0..damped.nrows() {
                damped[(k, k)] += lambda;
            }
            let Some(step) = damped.clone().lu().solve(&(-&grad)) else {
                lambda *= 2.0;
                continue;
            };
            let mut candidate = &gammas + &step;
            candidate.iter_mut().for_each(|g| *g = g.max(0.0));
            let new_cost = problem.residuals(&candidate).norm_squared();
            if new_cost <= cost {
                let step_size = (&candidate - &gammas).amax();
                let improvement = cost - new_cost;
                gammas = candidate;
                cost = new_cost;
                lambda /= 3.0;
                accepted = true;
                if step_size < opts.step_tolerance
                    || improvement <= opts.cost_tolerance * (1.0 + cost)
                {
                    converged = true;
                }
                break;
            }
            lambda *= 2.0;
        }
        if converged {
            break;
        }
        if !accepted {
            // no downhill step found at any damping: stationary point
            converged = true;
            break;
        }
    }

    if !converged {
        return Err(Error::FitNonConvergence {
            iterations: opts.max_iterations,
            residual_norm: cost.sqrt(),
            best: gammas.iter().copied().collect(),
        });
    }

    let stderrs = standard_errors(&problem, &gammas);
    Ok(components
        .iter()
        .enumerate()
        .map(|(k, &(n, _, _))| RateEstimate {
            n,
            rate: gammas[k],
            stderr: stderrs[k],
        })
        .collect())
}

/// Standard errors from the local quadratic model: cov = σ² (JᵀJ)⁻¹ with
/// σ² = ‖r‖²/(m − p).
fn standard_errors(problem: &Problem<'_>, gammas: &DVector<f64>) -> Vec<f64> {
    let m = problem.times.len();
    let p = problem.components.len();
    if m <= p {
        return vec![0.0; p];
    }
    let r = problem.residuals(gammas);
    let jac = problem.jacobian(gammas);
    let jtj = jac.transpose() * &jac;
    let sigma2 = r.norm_squared() / (m - p) as f64;
    match jtj.try_inverse() {
        Some(inv) => (0..p)
            .map(|k| (sigma2 * inv[(k, k)]).max(0.0).sqrt())
            .collect(),
        None => vec![0.0; p],
    }
}

/// Weighted log-log regression of γ_n = γ0 (n+1)^ν.
///
/// Weights are 1/stderr² when every entry carries a usable standard error,
/// uniform otherwise. Returns (γ0, ν, 2×2 covariance of (ln γ0, ν)).
pub fn fit_power_law(rates: &[RateEstimate]) -> Result<(f64, f64, [[f64; 2]; 2])> {
    let positive: Vec<&RateEstimate> = rates.iter().filter(|r| r.rate > 0.0).collect();
    if positive.len() < 2 {
        return Err(Error::TooFewRates(positive.len()));
    }
    let use_weights = positive
        .iter()
        .all(|r| r.stderr.is_finite() && r.stderr > 1e-14 * r.rate);
    let points: Vec<(f64, f64, f64)> = positive
        .iter()
        .map(|r| {
            let w = if use_weights {
                // stderr of ln γ is stderr/γ
                let s = r.stderr / r.rate;
                1.0 / (s * s)
            } else {
                1.0
            };
            (((r.n + 1) as f64).ln(), r.rate.ln(), w)
        })
        .collect();

    let sw: f64 = points.iter().map(|p| p.2).sum();
    let sx: f64 = points.iter().map(|p| p.2 * p.0).sum();
    let sy: f64 = points.iter().map(|p| p.2 * p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.2 * p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.2 * p.0 * p.1).sum();
    let denom = sw * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::IllConditionedFit(
            "all rates at the same level index".into(),
        ));
    }
    let nu = (sw * sxy - sx * sy) / denom;
    let intercept = (sy - nu * sx) / sw;
    let cov = [
        [sxx / denom, -sx / denom],
        [-sx / denom, sw / denom],
    ];
    Ok((intercept.exp(), nu, cov))
}

/// Full pipeline: rate fit, then power-law regression, with the residual of
/// the final model against the trace. Rates pinned at zero are excluded from
/// the regression.
pub fn fit_full_model(
    trace: &PopulationTrace,
    dist: &MotionalDistribution,
    g: f64,
    opts: &FitOptions,
) -> Result<DecayRateFit> {
    let rates = fit_decay_rates(trace, dist, g, opts)?;
    let (gamma0_hat, nu_hat, _cov) = fit_power_law(&rates)?;

    // residual of the fitted trace model
    let mut ss = 0.0;
    for (j, &t) in trace.times.iter().enumerate() {
        let mut sum = 0.0;
        for r in &rates {
            let p = dist.probabilities()[r.n];
            let freq = 2.0 * g * ((r.n + 1) as f64).sqrt();
            sum += p * (freq * t).cos() * (-r.rate * t).exp();
        }
        let model = 0.5 * (1.0 + sum);
        ss += (model - trace.p_down[j]).powi(2);
    }

    Ok(DecayRateFit {
        gamma_n: rates,
        gamma0_hat,
        nu_hat,
        residual_norm: ss.sqrt(),
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{population_trace, DistributionKind, MotionalDistribution};
    use crate::model::ModelParams;
    use crate::quad::QuadratureConfig;
    use crate::spectral::{SpectralDensitySpec, Temperature};
    use approx::assert_relative_eq;

    fn synthesize(
        g: f64,
        d: f64,
        gamma0: f64,
        kind: DistributionKind,
        t_max: f64,
        samples: usize,
    ) -> (PopulationTrace, MotionalDistribution) {
        let params = ModelParams::new(g, d, gamma0).unwrap();
        let dist = MotionalDistribution::auto(kind).unwrap();
        let spec = SpectralDensitySpec::Flat { gamma0 };
        let times: Vec<f64> = (0..samples)
            .map(|i| t_max * i as f64 / (samples - 1) as f64)
            .collect();
        let trace = population_trace(
            &params,
            &spec,
            Temperature::Zero,
            &dist,
            &times,
            &QuadratureConfig::default(),
        )
        .unwrap();
        (trace, dist)
    }

    #[test]
    fn fock_ground_state_round_trip() {
        let (trace, dist) = synthesize(1.0, -0.15, 0.1, DistributionKind::Fock { n: 0 }, 30.0, 200);
        let rates = fit_decay_rates(&trace, &dist, 1.0, &FitOptions::default()).unwrap();
        assert_eq!(rates.len(), 1);
        assert!((rates[0].rate - 0.1).abs() < 1e-6, "rate {}", rates[0].rate);
    }

    #[test]
    fn undamped_trace_gives_zero_rates() {
        // finite-support mixture: the fit model is exactly realizable
        let params = ModelParams::new(1.0, -0.15, 0.0).unwrap();
        let dist = MotionalDistribution::from_probabilities(vec![0.4, 0.35, 0.25]).unwrap();
        let spec = SpectralDensitySpec::Flat { gamma0: 0.0 };
        let times: Vec<f64> = (0..400).map(|i| 30.0 * i as f64 / 399.0).collect();
        let trace = population_trace(
            &params,
            &spec,
            Temperature::Zero,
            &dist,
            &times,
            &QuadratureConfig::default(),
        )
        .unwrap();
        let rates = fit_decay_rates(&trace, &dist, 1.0, &FitOptions::default()).unwrap();
        for r in rates {
            assert!(r.rate.abs() < 1e-8, "gamma_{} = {}", r.n, r.rate);
        }
    }

    #[test]
    fn coherent_round_trip_one_percent() {
        let (trace, dist) =
            synthesize(1.0, -0.15, 0.05, DistributionKind::Coherent { nbar: 3.0 }, 40.0, 1200);
        // small p_min so the model is near-exactly realizable; only n ≤ 7
        // carry enough weight for a meaningful estimate
        let opts = FitOptions {
            p_min: 1e-4,
            ..FitOptions::default()
        };
        let rates = fit_decay_rates(&trace, &dist, 1.0, &opts).unwrap();
        for r in rates.iter().filter(|r| r.n <= 7) {
            let truth = 0.05 * ((r.n + 1) as f64).powf(0.7);
            assert!(
                (r.rate - truth).abs() / truth < 0.01,
                "gamma_{}: {} vs {}",
                r.n,
                r.rate,
                truth
            );
        }
    }

    #[test]
    fn power_law_exact_on_linear_rates() {
        let rates: Vec<RateEstimate> = (0..4)
            .map(|n| RateEstimate {
                n,
                rate: 0.1 * (n + 1) as f64,
                stderr: 0.0,
            })
            .collect();
        let (g0, nu, _) = fit_power_law(&rates).unwrap();
        assert_relative_eq!(nu, 1.0, max_relative = 1e-12);
        assert_relative_eq!(g0, 0.1, max_relative = 1e-12);
    }

    #[test]
    fn power_law_exact_on_loglinear_rates() {
        let rates: Vec<RateEstimate> = (0..6)
            .map(|n| RateEstimate {
                n,
                rate: 0.1 * ((n + 1) as f64).powf(0.7),
                stderr: 0.0,
            })
            .collect();
        let (g0, nu, _) = fit_power_law(&rates).unwrap();
        assert_relative_eq!(nu, 0.7, epsilon = 1e-10);
        assert_relative_eq!(g0, 0.1, epsilon = 1e-10);
    }

    #[test]
    fn power_law_needs_two_positive_rates() {
        let rates = vec![RateEstimate { n: 0, rate: 0.1, stderr: 0.0 }];
        assert!(matches!(fit_power_law(&rates), Err(Error::TooFewRates(1))));
        let rates = vec![
            RateEstimate { n: 0, rate: 0.0, stderr: 0.0 },
            RateEstimate { n: 1, rate: 0.0, stderr: 0.0 },
        ];
        assert!(matches!(fit_power_law(&rates), Err(Error::TooFewRates(0))));
    }

    #[test]
    fn full_model_round_trip() {
        let (trace, dist) =
            synthesize(1.0, -0.15, 0.1, DistributionKind::Coherent { nbar: 3.0 }, 40.0, 1000);
        let fit = fit_full_model(&trace, &dist, 1.0, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert!((fit.nu_hat - 0.7).abs() < 0.02, "nu_hat {}", fit.nu_hat);
        assert!((fit.gamma0_hat - 0.1).abs() < 0.002, "gamma0_hat {}", fit.gamma0_hat);

        let (trace, dist) =
            synthesize(1.0, 0.0, 0.1, DistributionKind::Coherent { nbar: 3.0 }, 40.0, 1000);
        let fit = fit_full_model(&trace, &dist, 1.0, &FitOptions::default()).unwrap();
        assert!((fit.nu_hat - 1.0).abs() < 0.01, "nu_hat {}", fit.nu_hat);
    }

    #[test]
    fn scale_equivariance() {
        let (trace, dist) =
            synthesize(1.0, -0.15, 0.08, DistributionKind::Coherent { nbar: 2.0 }, 40.0, 800);
        let fit_a = fit_full_model(&trace, &dist, 1.0, &FitOptions::default()).unwrap();

        let s = 2.5;
        let scaled_times: Vec<f64> = trace.times.iter().map(|t| t * s).collect();
        let params = ModelParams::new(1.0 / s, -0.15, 0.08 / s).unwrap();
        let spec = SpectralDensitySpec::Flat { gamma0: 0.08 / s };
        let scaled = population_trace(
            &params,
            &spec,
            Temperature::Zero,
            &dist,
            &scaled_times,
            &QuadratureConfig::default(),
        )
        .unwrap();
        let fit_b = fit_full_model(&scaled, &dist, 1.0 / s, &FitOptions::default()).unwrap();
        assert!((fit_a.nu_hat - fit_b.nu_hat).abs() < 1e-6);
        assert_relative_eq!(fit_a.gamma0_hat, fit_b.gamma0_hat * s, max_relative = 1e-6);
    }

    #[test]
    fn deterministic_given_identical_inputs() {
        let (trace, dist) =
            synthesize(1.0, -0.15, 0.1, DistributionKind::Thermal { nbar: 1.0 }, 35.0, 600);
        let a = fit_full_model(&trace, &dist, 1.0, &FitOptions::default()).unwrap();
        let b = fit_full_model(&trace, &dist, 1.0, &FitOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noisy_trace_stays_near_truth() {
        use rand::{Rng, SeedableRng};
        let (trace, dist) =
            synthesize(1.0, -0.15, 0.1, DistributionKind::Coherent { nbar: 3.0 }, 40.0, 1000);
        let mut worst = 0.0f64;
        for seed in 0..20 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut noisy = trace.clone();
            for p in noisy.p_down.iter_mut() {
                *p += rng.gen_range(-0.005..0.005);
            }
            let fit = fit_full_model(&noisy, &dist, 1.0, &FitOptions::default()).unwrap();
            worst = worst.max((fit.nu_hat - 0.7).abs());
        }
        assert!(worst < 0.05, "worst |nu_hat - 0.7| = {worst}");
    }
}
