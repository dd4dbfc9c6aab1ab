//! On-disk interchange formats.
//!
//! Traces are plain `t,p_down` CSV with a JSON sidecar carrying the inputs
//! that produced them; fits and oracle reports are JSON. Floats are written
//! with the shortest round-trip decimal representation so identical runs
//! produce byte-identical files.

use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::config::RunConfig;
use crate::dynamics::{MotionalDistribution, PopulationTrace};
use crate::error::{Error, Result};
use crate::fit::DecayRateFit;
use crate::model::ModelParams;
use crate::spectral::{SpectralDensitySpec, Temperature};

/// Sidecar metadata written next to each trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub version: String,
    pub params: ModelParams,
    pub spectral: SpectralDensitySpec,
    pub temperature: Temperature,
    pub distribution: MotionalDistribution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
}

pub fn write_trace_csv(path: &Path, trace: &PopulationTrace) -> Result<()> {
    let mut out = String::from("t,p_down\n");
    for (t, p) in trace.times.iter().zip(&trace.p_down) {
        out.push_str(&format!("{t},{p}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_trace_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("t,p_down") => {}
        other => {
            return Err(Error::Config {
                path: path.display().to_string(),
                message: format!("expected header \"t,p_down\", got {other:?}"),
            })
        }
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.and_then(|v| v.parse().ok()).ok_or_else(|| Error::Config {
                path: path.display().to_string(),
                message: format!("malformed row {} : {line:?}", i + 2),
            })
        };
        times.push(parse(cols.next())?);
        values.push(parse(cols.next())?);
    }
    Ok((times, values))
}

/// Write the sidecar `<stem>.meta.json` for a trace CSV at `csv_path`.
pub fn write_trace_meta(csv_path: &Path, trace: &PopulationTrace, config: Option<&RunConfig>) -> Result<()> {
    let meta = TraceMeta {
        version: env!("CARGO_PKG_VERSION").to_string(),
        params: trace.params,
        spectral: trace.spectral.clone(),
        temperature: trace.temperature,
        distribution: trace.distribution.clone(),
        config: config.cloned(),
    };
    let path = meta_path(csv_path);
    write_json(&path, &meta)
}

pub fn read_trace_meta(csv_path: &Path) -> Result<TraceMeta> {
    let text = fs::read_to_string(meta_path(csv_path))?;
    Ok(serde_json::from_str(&text)?)
}

fn meta_path(csv_path: &Path) -> std::path::PathBuf {
    let stem = csv_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("trace");
    csv_path.with_file_name(format!("{stem}.meta.json"))
}

/// Reassemble a full trace from a CSV and its sidecar.
pub fn read_trace(csv_path: &Path) -> Result<PopulationTrace> {
    let (times, p_down) = read_trace_csv(csv_path)?;
    let meta = read_trace_meta(csv_path)?;
    Ok(PopulationTrace {
        times,
        p_down,
        params: meta.params,
        spectral: meta.spectral,
        temperature: meta.temperature,
        distribution: meta.distribution,
    })
}

pub fn write_fit_json(path: &Path, fit: &DecayRateFit) -> Result<()> {
    write_json(path, fit)
}

/// One checked oracle property in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReportEntry {
    pub property: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn write_oracle_report(path: &Path, report: &[OracleReportEntry]) -> Result<()> {
    write_json(path, &report)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{population_trace, DistributionKind};
    use crate::quad::QuadratureConfig;
    use tempfile::tempdir;

    fn sample_trace() -> PopulationTrace {
        let params = ModelParams::new(1.0, -0.15, 0.1).unwrap();
        let dist = MotionalDistribution::new(DistributionKind::Coherent { nbar: 1.0 }, 25).unwrap();
        let spec = SpectralDensitySpec::Flat { gamma0: 0.1 };
        let times: Vec<f64> = (0..50).map(|i| 0.3 * i as f64).collect();
        population_trace(
            &params,
            &spec,
            Temperature::Zero,
            &dist,
            &times,
            &QuadratureConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let trace = sample_trace();
        write_trace_csv(&path, &trace).unwrap();
        write_trace_meta(&path, &trace, None).unwrap();
        let back = read_trace(&path).unwrap();
        assert_eq!(back, trace);
    }

    #[test]
    fn writes_are_deterministic() {
        let dir = tempdir().unwrap();
        let trace = sample_trace();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_trace_csv(&a, &trace).unwrap();
        write_trace_csv(&b, &trace).unwrap();
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
    }

    #[test]
    fn malformed_csv_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "time,down\n0,1\n").unwrap();
        assert!(read_trace_csv(&path).is_err());
        fs::write(&path, "t,p_down\n0,abc\n").unwrap();
        assert!(read_trace_csv(&path).is_err());
    }
}
