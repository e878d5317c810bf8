use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::{AutoOr, ExperimentConfig, Resolved};
use super::output::{csv_row, TRACE_COLUMNS};
use super::run::run_seeds;
use crate::algorithms::Trace;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Axis {
    #[serde(rename = "compressor.k")]
    CompressorK,
    #[serde(rename = "p")]
    P,
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "seed-count")]
    SeedCount,
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "compressor.k" => Ok(Axis::CompressorK),
            "p" => Ok(Axis::P),
            "gamma" => Ok(Axis::Gamma),
            "seed-count" => Ok(Axis::SeedCount),
            other => Err(Error::usage(format!(
                "unknown sweep axis {other:?} (expected compressor.k, p, gamma or seed-count)"
            ))),
        }
    }
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::CompressorK => "compressor.k",
            Axis::P => "p",
            Axis::Gamma => "gamma",
            Axis::SeedCount => "seed-count",
        }
    }

    fn apply(self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut c = base.clone();
        let count = || {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::Config(format!("sweep.values: {} needs positive integers, got {value}", self.name())))
            }
        };
        match self {
            Axis::CompressorK => {
                c.compressor.kind = "rand_k".into();
                c.compressor.k = Some(count()?);
            }
            Axis::P => c.algorithm.p = AutoOr::Value(value),
            Axis::Gamma => c.algorithm.gamma = AutoOr::Value(value),
            // the first `count` entries of `seeds`, continued consecutively
            Axis::SeedCount => {
                let first = c.seeds[0];
                c.seeds = (0..count()? as u64).map(|j| c.seeds.get(j as usize).copied().unwrap_or(first + j)).collect();
            }
        }
        Ok(c)
    }
}

/// First record with `‖∇f‖² ≤ target` and its cumulative uplink floats.
pub fn floats_to_target(trace: &Trace, target: f64) -> Option<(usize, u64)> {
    trace
        .records
        .iter()
        .find(|r| r.grad_sq_norm <= target)
        .map(|r| (r.k, r.uplink_floats_cum))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub gamma: f64,
    pub p: f64,
    pub seeds: Vec<u64>,
    pub reached: usize,
    /// Mean over seeds that reached the target.
    pub mean_floats_to_target: Option<f64>,
    pub mean_iter_to_target: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub axis: Axis,
    pub target_grad_sq_norm: f64,
    pub points: Vec<SweepPoint>,
}

/// `sweep <config> --axis <name>`.
///
/// Writes `sweep.csv` (long format: axis value, seed, then the trace
/// columns), `sweep_summary.csv` (one row per value and seed) and
/// `sweep_summary.json` (per-value means).
pub fn sweep(config_path: &Path, axis: Axis) -> Result<SweepSummary> {
    let base = ExperimentConfig::load(config_path)?;
    let sweep_cfg = base
        .sweep
        .clone()
        .ok_or_else(|| Error::usage("config has no [sweep] section"))?;
    if sweep_cfg.values.is_empty() {
        return Err(Error::usage("sweep.values is empty"));
    }
    let eps = sweep_cfg
        .epsilon
        .or(base.algorithm.epsilon)
        .ok_or_else(|| Error::Config("sweep.epsilon: required for floats-to-target".into()))?;
    let target = eps * eps;
    let out_dir = base.output.dir.clone();
    std::fs::create_dir_all(&out_dir)?;

    let mut long = format!("axis_value,seed,{}\n", TRACE_COLUMNS.join(","));
    let mut rows = String::from("axis_value,seed,iter_to_target,floats_to_target\n");
    let mut points = Vec::new();
    let mut failure = None;
    for &value in &sweep_cfg.values {
        let resolved = Resolved::new(axis.apply(&base, value)?)?;
        let seeds = resolved.config.seeds.clone();
        let mut reached = Vec::new();
        for (seed, result) in run_seeds(&resolved, &seeds) {
            let trace = match result {
                Ok(t) => t,
                Err(Error::Diverged { iteration, trace }) => {
                    failure.get_or_insert(Error::Diverged { iteration, trace });
                    continue;
                }
                Err(e) => return Err(e),
            };
            for r in &trace.records {
                let _ = writeln!(long, "{value},{seed},{}", csv_row(r, base.output.record_lyapunov));
            }
            match floats_to_target(&trace, target) {
                Some((k, floats)) => {
                    let _ = writeln!(rows, "{value},{seed},{k},{floats}");
                    reached.push((k, floats));
                }
                None => {
                    let _ = writeln!(rows, "{value},{seed},,");
                }
            }
        }
        let count = reached.len();
        let mean = |f: fn(&(usize, u64)) -> f64| (count > 0).then(|| reached.iter().map(f).sum::<f64>() / count as f64);
        points.push(SweepPoint {
            value,
            gamma: resolved.plan.gamma,
            p: resolved.plan.p,
            seeds,
            reached: count,
            mean_floats_to_target: mean(|r| r.1 as f64),
            mean_iter_to_target: mean(|r| r.0 as f64),
        });
    }
    std::fs::write(out_dir.join("sweep.csv"), long)?;
    std::fs::write(out_dir.join("sweep_summary.csv"), rows)?;
    let summary = SweepSummary {
        axis,
        target_grad_sq_norm: target,
        points,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serialises");
    std::fs::write(out_dir.join("sweep_summary.json"), json + "\n")?;
    match failure {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}
