use num_complex::Complex64;
use rayon::prelude::*;
use std::fs;
use std::path::Path;

use dephasim::config::{DistributionSection, OracleSection};
use dephasim::io::{self, OracleReportEntry};
use dephasim::{
    brute_force_r, closed_form_r, fit_full_model, parse_config, population_trace,
    verify_trace_identity, CounterTerm, DressedState, Error, FiniteReservoirSpec, Mode,
    MotionalDistribution, Result, RunConfig, RunMode, Temperature,
};

pub fn dispatch(mode: RunMode, config: Option<&Path>, out_dir: &Path, quiet: bool) -> Result<()> {
    let config = load_config(mode, config)?;
    crate::ensure_dir(out_dir)?;
    match mode {
        RunMode::Simulate => simulate(&config, out_dir, quiet),
        RunMode::Fit => fit(&config, out_dir, quiet),
        RunMode::OracleCheck => oracle_check(&config, out_dir, quiet),
        RunMode::Sweep => sweep(&config, out_dir, quiet),
        RunMode::ReproduceNist => reproduce_nist(&config, out_dir, quiet),
    }
}

fn load_config(mode: RunMode, path: Option<&Path>) -> Result<RunConfig> {
    let config = match path {
        Some(p) => parse_config(&fs::read_to_string(p)?)?,
        None if mode == RunMode::ReproduceNist => parse_config(NIST_DEFAULTS)?,
        None => {
            return Err(Error::Config {
                path: "--config".into(),
                message: format!("required for mode {mode}"),
            })
        }
    };
    if let Some(declared) = config.mode {
        if declared != mode {
            return Err(Error::Config {
                path: "mode".into(),
                message: format!("config declares mode {declared}, CLI invoked {mode}"),
            });
        }
    }
    Ok(config)
}

/// Headline defaults: d = -0.15, flat spectrum, coherent n̄ = 3, 1000 samples
/// out to t = 40/g.
const NIST_DEFAULTS: &str = r#"{
    "model": {"g": 1.0, "d": -0.15, "gamma0": 0.1},
    "spectral": {"family": "flat"},
    "distribution": {"kind": "coherent", "nbar": 3.0},
    "time_grid": {"start": 0.0, "stop": 40.0, "count": 1000},
    "name": "reproduce-nist"
}"#;

fn synthesize(config: &RunConfig) -> Result<(dephasim::PopulationTrace, MotionalDistribution)> {
    let params = config.model_params()?;
    let spec = config.spectral_spec()?;
    let temp = config.temperature()?;
    let dist = config.distribution()?;
    let times = config.times()?;
    let trace = population_trace(
        &params,
        &spec,
        temp,
        &dist,
        &times,
        &config.quadrature_config(),
    )?;
    Ok((trace, dist))
}

fn simulate(config: &RunConfig, out_dir: &Path, quiet: bool) -> Result<()> {
    let (trace, _) = synthesize(config)?;
    let name = config.output_name(RunMode::Simulate);
    let csv = out_dir.join(format!("{name}.csv"));
    io::write_trace_csv(&csv, &trace)?;
    io::write_trace_meta(&csv, &trace, Some(config))?;
    if !quiet {
        println!(
            "wrote {} ({} samples) and sidecar metadata",
            csv.display(),
            trace.times.len()
        );
    }
    Ok(())
}

fn fit(config: &RunConfig, out_dir: &Path, quiet: bool) -> Result<()> {
    let params = config.model_params()?;
    let (trace, dist) = match &config.input {
        Some(input) => {
            let trace = io::read_trace(Path::new(&input.trace))?;
            let dist = trace.distribution.clone();
            (trace, dist)
        }
        None => synthesize(config)?,
    };
    let result = fit_full_model(&trace, &dist, params.g, &config.fit_options())?;

    let name = config.output_name(RunMode::Fit);
    let json = out_dir.join(format!("{name}.json"));
    io::write_fit_json(&json, &result)?;

    // per-level residual against the fitted power law
    let mut csv = String::from("n,rate,stderr,power_law_rate,residual\n");
    for r in &result.gamma_n {
        let model = result.gamma0_hat * ((r.n + 1) as f64).powf(result.nu_hat);
        let residual = r.rate - model;
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n, r.rate, r.stderr, model, residual
        ));
    }
    fs::write(out_dir.join(format!("{name}.rates.csv")), csv)?;

    if !quiet {
        println!(
            "nu_hat = {:.6}, gamma0_hat = {:.6}, residual_norm = {:.3e} -> {}",
            result.nu_hat,
            result.gamma0_hat,
            result.residual_norm,
            json.display()
        );
    }
    Ok(())
}

fn default_oracle_section() -> OracleSection {
    serde_json::from_str(
        r#"{"modes": [{"omega": 1.0, "coupling": 0.3}, {"omega": 2.3, "coupling": 0.2}],
            "fock_cutoff": 30}"#,
    )
    .expect("bundled oracle section is valid")
}

fn oracle_check(config: &RunConfig, out_dir: &Path, quiet: bool) -> Result<()> {
    let params = config.model_params()?;
    let section = config.oracle.clone().unwrap_or_else(default_oracle_section);
    let modes: Vec<Mode> = section
        .modes
        .iter()
        .map(|m| Mode {
            omega: m.omega,
            coupling: m.coupling,
        })
        .collect();
    let cutoff = section.fock_cutoff;

    let mut report = Vec::new();

    // displacement identities: composition, conjugation, thermal trace
    let mut identity_worst = 0.0f64;
    for &re in &[0.0, 0.2, 0.5, 1.0] {
        let alpha = Complex64::new(re, 0.0);
        for temp in [
            Temperature::Zero,
            Temperature::finite(0.5).unwrap(),
            Temperature::finite(1.0).unwrap(),
            Temperature::finite(2.0).unwrap(),
        ] {
            // the smallest βω in the sweep needs a taller Fock ladder: the
            // trace residual is bounded below by the thermal tail
            identity_worst =
                identity_worst.max(verify_trace_identity(alpha, 1.0, temp, cutoff.max(60))?);
        }
    }
    report.push(entry("displacement-identities", identity_worst, 1e-9));

    // closed-form equivalence across sectors, temperatures, and a t-grid
    let sectors = [
        (DressedState::new(0, 1)?, DressedState::new(0, 2)?),
        (DressedState::new(1, 1)?, DressedState::new(1, 2)?),
        (DressedState::new(2, 1)?, DressedState::new(2, 2)?),
        (DressedState::new(0, 1)?, DressedState::new(0, 3)?),
    ];
    let omega_min = modes.iter().map(|m| m.omega).fold(f64::INFINITY, f64::min);
    let temps = [Temperature::Zero, Temperature::finite(1.0 / omega_min)?];
    let mut equivalence_worst = 0.0f64;
    let mut diagonal_worst = 0.0f64;
    for temp in temps {
        let reservoir = FiniteReservoirSpec::new(modes.clone(), cutoff, temp)?;
        for (s1, s2) in sectors {
            for j in 1..=50 {
                let t = j as f64 * (4.0 * std::f64::consts::PI / omega_min) / 50.0;
                let brute =
                    brute_force_r(s1, s2, &params, &reservoir, t, CounterTerm::OmegaLinear)?;
                let closed = closed_form_r(s1, s2, &params, &modes, temp, t);
                equivalence_worst = equivalence_worst.max((brute - closed).norm());
            }
        }
        let s = DressedState::new(1, 1)?;
        for j in 1..=10 {
            let t = j as f64 * 0.7;
            let r = brute_force_r(s, s, &params, &reservoir, t, CounterTerm::OmegaLinear)?;
            diagonal_worst = diagonal_worst.max((r - Complex64::new(1.0, 0.0)).norm());
        }
    }
    report.push(entry("closed-form-equivalence", equivalence_worst, 1e-6));
    report.push(entry("diagonal-stationarity", diagonal_worst, 1e-9));

    // multi-mode result must factorize into single-mode products
    let mut factor_worst = 0.0f64;
    if modes.len() >= 2 {
        let s1 = DressedState::new(0, 1)?;
        let s2 = DressedState::new(0, 2)?;
        let joint = FiniteReservoirSpec::new(modes.clone(), cutoff, Temperature::Zero)?;
        for j in 1..=10 {
            let t = j as f64 * 0.5;
            let all = brute_force_r(s1, s2, &params, &joint, t, CounterTerm::OmegaLinear)?;
            let mut product = Complex64::new(1.0, 0.0);
            for m in &modes {
                let single = FiniteReservoirSpec::new(vec![*m], cutoff, Temperature::Zero)?;
                product *= brute_force_r(s1, s2, &params, &single, t, CounterTerm::OmegaLinear)?;
            }
            factor_worst = factor_worst.max((all - product).norm());
        }
        report.push(entry("mode-factorization", factor_worst, 1e-10));
    }

    let name = config.output_name(RunMode::OracleCheck);
    let path = out_dir.join(format!("{name}.report.json"));
    io::write_oracle_report(&path, &report)?;

    let all_pass = report.iter().all(|e| e.pass);
    if !quiet {
        for e in &report {
            println!(
                "{}: max residual {:.3e} (tolerance {:.0e}) -> {}",
                e.property,
                e.max_residual,
                e.tolerance,
                if e.pass { "pass" } else { "FAIL" }
            );
        }
    }
    if !all_pass {
        return Err(Error::TruncationBudget {
            context: "oracle property suite failed".into(),
            residual: report
                .iter()
                .filter(|e| !e.pass)
                .map(|e| e.max_residual)
                .fold(0.0, f64::max),
        });
    }
    Ok(())
}

fn entry(property: &str, max_residual: f64, tolerance: f64) -> OracleReportEntry {
    OracleReportEntry {
        property: property.to_string(),
        max_residual,
        tolerance,
        pass: max_residual < tolerance,
    }
}

fn sweep(config: &RunConfig, out_dir: &Path, quiet: bool) -> Result<()> {
    let section = config.sweep.clone().ok_or_else(|| Error::Config {
        path: "sweep".into(),
        message: "required for sweep mode".into(),
    })?;
    let name = config.output_name(RunMode::Sweep);

    let results: Vec<Result<(f64, dephasim::DecayRateFit)>> = section
        .values
        .par_iter()
        .map(|&value| {
            let variant = apply_axis(config, &section.parameter, value)?;
            let params = variant.model_params()?;
            let (trace, dist) = synthesize(&variant)?;
            let csv = out_dir.join(format!("{name}-{}-{value}.csv", section.parameter));
            io::write_trace_csv(&csv, &trace)?;
            io::write_trace_meta(&csv, &trace, Some(&variant))?;
            let fit = fit_full_model(&trace, &dist, params.g, &variant.fit_options())?;
            io::write_fit_json(
                &out_dir.join(format!("{name}-{}-{value}.json", section.parameter)),
                &fit,
            )?;
            Ok((value, fit))
        })
        .collect();

    let mut summary = format!("{},nu_hat,gamma0_hat,residual_norm\n", section.parameter);
    for r in results {
        let (value, fit) = r?;
        summary.push_str(&format!(
            "{value},{},{},{}\n",
            fit.nu_hat, fit.gamma0_hat, fit.residual_norm
        ));
        if !quiet {
            println!("{} = {value}: nu_hat = {:.4}", section.parameter, fit.nu_hat);
        }
    }
    fs::write(out_dir.join(format!("{name}.summary.csv")), summary)?;
    Ok(())
}

fn apply_axis(config: &RunConfig, parameter: &str, value: f64) -> Result<RunConfig> {
    let mut variant = config.clone();
    match parameter {
        "d" => variant.model.d = value,
        "gamma0" => variant.model.gamma0 = value,
        "g" => variant.model.g = value,
        "nbar" => {
            let dist = variant.distribution.clone().ok_or_else(|| Error::Config {
                path: "distribution".into(),
                message: "required for an nbar sweep".into(),
            })?;
            variant.distribution = Some(match dist {
                DistributionSection::Coherent { cutoff, .. } => {
                    DistributionSection::Coherent { nbar: value, cutoff }
                }
                DistributionSection::Thermal { cutoff, .. } => {
                    DistributionSection::Thermal { nbar: value, cutoff }
                }
                DistributionSection::Fock { .. } => {
                    return Err(Error::Config {
                        path: "sweep.parameter".into(),
                        message: "nbar sweep needs a coherent or thermal distribution".into(),
                    })
                }
            });
        }
        other => {
            return Err(Error::Config {
                path: "sweep.parameter".into(),
                message: format!("unknown axis {other:?}"),
            })
        }
    }
    variant.validate()?;
    Ok(variant)
}

fn reproduce_nist(config: &RunConfig, out_dir: &Path, quiet: bool) -> Result<()> {
    let params = config.model_params()?;
    let (trace, dist) = synthesize(config)?;
    let fit = fit_full_model(&trace, &dist, params.g, &config.fit_options())?;

    let name = config.output_name(RunMode::ReproduceNist);
    let csv = out_dir.join(format!("{name}.csv"));
    io::write_trace_csv(&csv, &trace)?;
    io::write_trace_meta(&csv, &trace, Some(config))?;
    io::write_fit_json(&out_dir.join(format!("{name}.json")), &fit)?;

    let target = 0.7;
    let deviation = fit.nu_hat - target;
    if !quiet {
        println!(
            "nu_hat = {:.4} (observed exponent {target}, deviation {deviation:+.4})",
            fit.nu_hat
        );
        println!(
            "gamma0_hat = {:.6} (input gamma0 = {})",
            fit.gamma0_hat, params.gamma0
        );
    }
    Ok(())
}
