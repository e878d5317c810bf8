//! Labelled sparse datasets: LibSVM text I/O and a synthetic generator.
//!
//! LibSVM lines look like `<label> <index>:<value> <index>:<value> ...` with
//! 1-based, strictly increasing indices. Blank lines and lines starting with
//! `#` are skipped. Labels map to ±1 as follows:
//!
//! | text in file            | label |
//! |-------------------------|-------|
//! | `+1`, `1`               | +1    |
//! | `-1`, `0`, `2`          | -1    |
//!
//! `2` covers the `{1, 2}` labelling used by some binary LibSVM sets
//! (e.g. mushrooms). Anything else is a parse error.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{rng, RngStream, SparseVector};

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub features: SparseVector,
    /// Either `+1.0` or `-1.0`.
    pub label: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    rows: Vec<Row>,
    dim: usize,
}

impl Dataset {
    pub fn new(rows: Vec<Row>, dim: usize) -> Result<Self> {
        for (t, row) in rows.iter().enumerate() {
            if row.features.dim() != dim {
                return Err(Error::usage(format!(
                    "row {t} has dimension {} but dataset has {dim}",
                    row.features.dim()
                )));
            }
            if row.label != 1.0 && row.label != -1.0 {
                return Err(Error::usage(format!("row {t} has label {} (expected ±1)", row.label)));
            }
        }
        Ok(Dataset { rows, dim })
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

fn parse_label(token: &str) -> Option<f64> {
    match token {
        "+1" | "1" | "+1.0" | "1.0" => Some(1.0),
        "-1" | "0" | "2" | "-1.0" | "0.0" | "2.0" => Some(-1.0),
        _ => None,
    }
}

/// Parses LibSVM text. `dim` fixes the feature dimension; otherwise it is the
/// largest index seen.
pub fn parse_libsvm<R: BufRead>(reader: R, dim: Option<usize>) -> Result<Dataset> {
    let mut parsed: Vec<(Vec<usize>, Vec<f64>, f64)> = Vec::new();
    let mut max_index = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let mut tokens = trimmed.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label = parse_label(label_tok).ok_or_else(|| err(format!("invalid label {label_tok:?}")))?;
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("malformed feature token {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| err(format!("invalid feature index {idx:?}")))?;
            if idx == 0 {
                return Err(err("feature indices are 1-based; got 0".into()));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| err(format!("non-numeric feature value {val:?}")))?;
            if !val.is_finite() {
                return Err(err(format!("non-finite feature value {val}")));
            }
            let zero_based = idx - 1;
            if indices.last().is_some_and(|&prev| zero_based <= prev) {
                return Err(err(format!("feature index {idx} is not increasing")));
            }
            max_index = max_index.max(idx);
            indices.push(zero_based);
            values.push(val);
        }
        parsed.push((indices, values, label));
    }
    let dim = match dim {
        Some(d) if d < max_index => {
            return Err(Error::usage(format!(
                "declared dimension {d} is smaller than the largest index {max_index}"
            )))
        }
        Some(d) => d,
        None => max_index,
    };
    let rows = parsed
        .into_iter()
        .map(|(indices, values, label)| Row {
            features: SparseVector::from_sorted_unchecked(dim, indices, values),
            label,
        })
        .collect();
    Ok(Dataset { rows, dim })
}

pub fn parse_libsvm_file(path: &Path, dim: Option<usize>) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    parse_libsvm(std::io::BufReader::new(file), dim)
}

/// Writes LibSVM text with `+1`/`-1` labels and shortest round-trip values.
pub fn write_libsvm(data: &Dataset) -> String {
    let mut out = String::new();
    for row in data.rows() {
        out.push_str(if row.label > 0.0 { "+1" } else { "-1" });
        for (i, v) in row.features.iter() {
            let _ = write!(out, " {}:{}", i + 1, v);
        }
        out.push('\n');
    }
    out
}

/// Gaussian features, labels from a random hyperplane with label-flip noise.
///
/// Features are i.i.d. `N(0, 1/d)` (so `E‖a‖² = 1`), the hyperplane normal is
/// `N(0, I)`, and each label is flipped independently with `flip_prob`. All
/// randomness comes from the `data-gen` stream of `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticClassification {
    pub rows: usize,
    pub dim: usize,
    pub flip_prob: f64,
    pub seed: u64,
}

impl SyntheticClassification {
    pub fn generate(&self) -> Result<Dataset> {
        if self.dim == 0 {
            return Err(Error::usage("synthetic dataset needs dim >= 1"));
        }
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return Err(Error::usage(format!("flip_prob {} outside [0, 1]", self.flip_prob)));
        }
        let mut rng = RngStream::new(self.seed, rng::DATA_GEN);
        let d = self.dim;
        let normal: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        let scale = 1.0 / (d as f64).sqrt();
        let mut rows = Vec::with_capacity(self.rows);
        for _ in 0..self.rows {
            let a: Vec<f64> = (0..d).map(|_| rng.standard_normal() * scale).collect();
            let margin: f64 = a.iter().zip(&normal).map(|(x, w)| x * w).sum();
            let mut label = if margin >= 0.0 { 1.0 } else { -1.0 };
            if rng.bernoulli(self.flip_prob) {
                label = -label;
            }
            rows.push(Row {
                features: SparseVector::from_sorted_unchecked(d, (0..d).collect(), a),
                label,
            });
        }
        Ok(Dataset { rows, dim: d })
    }
}
