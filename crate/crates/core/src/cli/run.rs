use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Plan, Resolved};
use super::output::write_trace;
use crate::algorithms::{run, Trace};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub iterations_completed: usize,
    pub final_f: f64,
    pub final_grad_sq_norm: f64,
    /// `(1/K) Σ_{k<K} ‖∇f(x^k)‖²`, the expectation of `‖∇f(x̂)‖²` over the output draw.
    pub avg_grad_sq_norm: f64,
    pub min_grad_sq_norm: f64,
    pub best_index: usize,
    pub x_hat_index: usize,
    pub uplink_floats_total: u64,
    pub uplink_bits_total: u64,
    pub downlink_floats_total: u64,
    pub oracle_calls_total: u64,
}

impl SeedSummary {
    pub fn from_trace(seed: u64, trace: &Trace) -> Self {
        let last = trace.last();
        let upto = trace.records.len().saturating_sub(1).max(1);
        let head = &trace.records[..upto.min(trace.records.len())];
        let avg = head.iter().map(|r| r.grad_sq_norm).sum::<f64>() / head.len() as f64;
        let min = head.iter().map(|r| r.grad_sq_norm).fold(f64::INFINITY, f64::min);
        SeedSummary {
            seed,
            iterations_completed: trace.records.len() - 1,
            final_f: last.f_value,
            final_grad_sq_norm: last.grad_sq_norm,
            avg_grad_sq_norm: avg,
            min_grad_sq_norm: min,
            best_index: trace.best_index,
            x_hat_index: trace.x_hat_index,
            uplink_floats_total: last.uplink_floats_cum,
            uplink_bits_total: last.uplink_floats_cum * trace.config.bits_per_float as u64,
            downlink_floats_total: last.downlink_floats_cum,
            oracle_calls_total: last.oracle_calls_cum,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanCurve {
    pub iter: Vec<usize>,
    pub f: Vec<f64>,
    pub grad_sq_norm: Vec<f64>,
    pub uplink_floats_cum: Vec<f64>,
}

impl MeanCurve {
    /// Averages over traces of equal length.
    pub fn from_traces(traces: &[&Trace]) -> Self {
        let len = traces.iter().map(|t| t.records.len()).min().unwrap_or(0);
        let s = traces.len() as f64;
        let avg = |field: fn(&crate::algorithms::IterationRecord) -> f64| -> Vec<f64> {
            (0..len)
                .map(|k| traces.iter().map(|t| field(&t.records[k])).sum::<f64>() / s)
                .collect()
        };
        MeanCurve {
            iter: (0..len).collect(),
            f: avg(|r| r.f_value),
            grad_sq_norm: avg(|r| r.grad_sq_norm),
            uplink_floats_cum: avg(|r| r.uplink_floats_cum as f64),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub plan: Plan,
    pub seeds: Vec<SeedSummary>,
    pub mean_curve: MeanCurve,
    /// `argmin_{k<K}` of the seed-averaged `‖∇f(x^k)‖²`.
    pub mean_best_index: usize,
    pub bound: f64,
    pub completed: bool,
}

/// Runs one trace per seed, in parallel across seeds.
pub fn run_seeds(resolved: &Resolved, seeds: &[u64]) -> Vec<(u64, Result<Trace>)> {
    seeds
        .par_iter()
        .map(|&seed| (seed, run(resolved.problem.as_ref(), &resolved.run_config(seed))))
        .collect()
}

/// `run <config>`: writes `trace_seed{s}.{csv,jsonl}` and `summary.json`.
///
/// A diverged seed leaves `trace_seed{s}.csv.partial` and makes the whole
/// run fail after every seed has finished.
pub fn run_experiment(config_path: &Path) -> Result<RunSummary> {
    let config = ExperimentConfig::load(config_path)?;
    let resolved = Resolved::new(config)?;
    let out = &resolved.config.output;
    std::fs::create_dir_all(&out.dir)?;
    let results = run_seeds(&resolved, &resolved.config.seeds);

    let mut traces = Vec::new();
    let mut first_error = None;
    for (seed, result) in results {
        let stem = format!("trace_seed{seed}");
        match result {
            Ok(trace) => {
                write_trace(&out.dir, &stem, "", &trace, &out.formats, out.record_lyapunov)?;
                traces.push((seed, trace));
            }
            Err(Error::Diverged { iteration, trace }) => {
                write_trace(&out.dir, &stem, ".partial", &trace, &out.formats, out.record_lyapunov)?;
                log::error!("seed {seed} diverged at iteration {iteration}");
                first_error.get_or_insert(Error::Diverged { iteration, trace });
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }

    let summary = summarize(&resolved, &traces, first_error.is_none());
    let json = serde_json::to_string_pretty(&summary).expect("summary serialises");
    let name = if summary.completed { "summary.json" } else { "summary.json.partial" };
    std::fs::write(out.dir.join(name), json + "\n")?;
    match first_error {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

pub fn summarize(resolved: &Resolved, traces: &[(u64, Trace)], completed: bool) -> RunSummary {
    let refs: Vec<&Trace> = traces.iter().map(|(_, t)| t).collect();
    let mean_curve = MeanCurve::from_traces(&refs);
    let upto = mean_curve.grad_sq_norm.len().saturating_sub(1).max(1).min(mean_curve.grad_sq_norm.len());
    let mean_best_index = mean_curve.grad_sq_norm[..upto]
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) })
        .0;
    RunSummary {
        config: resolved.config.clone(),
        plan: resolved.plan.clone(),
        seeds: traces.iter().map(|(s, t)| SeedSummary::from_trace(*s, t)).collect(),
        mean_curve,
        mean_best_index,
        bound: resolved.plan.bound,
        completed,
    }
}

/// `plan <config>`: the resolved parameters and theory values.
pub fn plan(config_path: &Path) -> Result<Plan> {
    let config = ExperimentConfig::load(config_path)?;
    Ok(Resolved::new(config)?.plan)
}
