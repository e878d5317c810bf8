//! Trace and summary file formats.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::algorithms::{IterationRecord, Trace};
use crate::error::Result;

/// Column order of every trace CSV.
pub const TRACE_COLUMNS: [&str; 9] = [
    "iter",
    "f",
    "grad_sq_norm",
    "c_k",
    "uplink_floats_cum",
    "downlink_floats_cum",
    "oracle_calls_cum",
    "est_err_sq",
    "lyapunov",
];

/// Keys of `summary.json`, in order.
pub const SUMMARY_KEYS: [&str; 7] = ["config", "plan", "seeds", "mean_curve", "mean_best_index", "bound", "completed"];

/// 17 significant digits, which round-trips every `f64`.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_header() -> String {
    TRACE_COLUMNS.join(",")
}

/// One CSV row; an empty `c_k` marks the final record and an empty
/// `lyapunov` means it was not requested.
pub fn csv_row(r: &IterationRecord, record_lyapunov: bool) -> String {
    let coin = match r.coin {
        Some(true) => "1",
        Some(false) => "0",
        None => "",
    };
    let lyap = if record_lyapunov { fmt_float(r.lyapunov) } else { String::new() };
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.k,
        fmt_float(r.f_value),
        fmt_float(r.grad_sq_norm),
        coin,
        r.uplink_floats_cum,
        r.downlink_floats_cum,
        r.oracle_calls_cum,
        fmt_float(r.est_err_sq),
        lyap
    )
}

pub fn trace_csv(trace: &Trace, record_lyapunov: bool) -> String {
    let mut out = csv_header();
    out.push('\n');
    for r in &trace.records {
        out.push_str(&csv_row(r, record_lyapunov));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct JsonRecord {
    iter: usize,
    f: f64,
    grad_sq_norm: f64,
    c_k: Option<u8>,
    uplink_floats_cum: u64,
    downlink_floats_cum: u64,
    oracle_calls_cum: u64,
    est_err_sq: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lyapunov: Option<f64>,
}

/// One JSON object per record, same fields as the CSV.
pub fn trace_jsonl(trace: &Trace, record_lyapunov: bool) -> String {
    let mut out = String::new();
    for r in &trace.records {
        let rec = JsonRecord {
            iter: r.k,
            f: r.f_value,
            grad_sq_norm: r.grad_sq_norm,
            c_k: r.coin.map(u8::from),
            uplink_floats_cum: r.uplink_floats_cum,
            downlink_floats_cum: r.downlink_floats_cum,
            oracle_calls_cum: r.oracle_calls_cum,
            est_err_sq: r.est_err_sq,
            lyapunov: record_lyapunov.then_some(r.lyapunov),
        };
        let _ = writeln!(out, "{}", serde_json::to_string(&rec).expect("records serialise"));
    }
    out
}

/// Writes the requested formats as `{stem}.csv` / `{stem}.jsonl`, with
/// `suffix` appended (used for `.partial`).
pub fn write_trace(
    dir: &Path,
    stem: &str,
    suffix: &str,
    trace: &Trace,
    formats: &[String],
    record_lyapunov: bool,
) -> Result<()> {
    for f in formats {
        let (ext, body) = match f.as_str() {
            "jsonl" => ("jsonl", trace_jsonl(trace, record_lyapunov)),
            _ => ("csv", trace_csv(trace, record_lyapunov)),
        };
        std::fs::write(dir.join(format!("{stem}.{ext}{suffix}")), body)?;
    }
    Ok(())
}
