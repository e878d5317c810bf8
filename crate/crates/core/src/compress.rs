//! Unbiased compression operators ("quantizations").
//!
//! Every operator `Q` satisfies `E[Q(x)] = x` and `E‖Q(x) − x‖² ≤ ω‖x‖²`, and
//! reports its expected density `ζ = sup_x E‖Q(x)‖₀`, which is the number of
//! floats a worker transmits per compressed message on average.
//!
//! * `identity`: `ω = 0`, `ζ = d`.
//! * `rand_k(K)`: keep a uniform K-subset scaled by `d/K`; `ω = d/K − 1`
//!   (tight), `ζ = K` (exact).
//! * `l2_quant`: `Q(x)_i = ‖x‖₂ sign(x_i) ξ_i` with `ξ_i ~ Be(|x_i|/‖x‖₂)`.
//!   Its exact variance is `‖x‖₂‖x‖₁ − ‖x‖₂²` and its expected density is
//!   `‖x‖₁/‖x‖₂`; by Cauchy–Schwarz `‖x‖₁ ≤ √d‖x‖₂`, which gives the reported
//!   worst-case values `ω = √d − 1` and `ζ = √d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{DenseVector, RngStream, SparseVector};

/// Largest outcome space [`Compressor::enumerate_outcomes`] will build.
pub const MAX_OUTCOMES: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CompressorKind {
    Identity,
    RandK { k: usize },
    L2Quant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Compressor {
    kind: CompressorKind,
    dim: usize,
}

impl Compressor {
    pub fn new(kind: CompressorKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::usage("compressor dimension must be positive"));
        }
        if let CompressorKind::RandK { k } = kind {
            if k == 0 || k > dim {
                return Err(Error::usage(format!("rand_k needs 1 <= K <= d, got K={k}, d={dim}")));
            }
        }
        Ok(Compressor { kind, dim })
    }

    pub fn identity(dim: usize) -> Self {
        Compressor {
            kind: CompressorKind::Identity,
            dim,
        }
    }

    pub fn rand_k(k: usize, dim: usize) -> Result<Self> {
        Self::new(CompressorKind::RandK { k }, dim)
    }

    pub fn l2_quant(dim: usize) -> Result<Self> {
        Self::new(CompressorKind::L2Quant, dim)
    }

    pub fn kind(&self) -> CompressorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Variance parameter `ω`.
    pub fn omega(&self) -> f64 {
        let d = self.dim as f64;
        match self.kind {
            CompressorKind::Identity => 0.0,
            CompressorKind::RandK { k } => d / k as f64 - 1.0,
            CompressorKind::L2Quant => d.sqrt() - 1.0,
        }
    }

    /// Expected density `ζ`.
    pub fn zeta(&self) -> f64 {
        let d = self.dim as f64;
        match self.kind {
            CompressorKind::Identity => d,
            CompressorKind::RandK { k } => k as f64,
            CompressorKind::L2Quant => d.sqrt(),
        }
    }

    /// `Q(x) = x` for every `x`.
    pub fn is_lossless(&self) -> bool {
        match self.kind {
            CompressorKind::Identity => true,
            CompressorKind::RandK { k } => k == self.dim,
            CompressorKind::L2Quant => false,
        }
    }

    pub fn compress(&self, x: &[f64], rng: &mut RngStream) -> SparseVector {
        assert_eq!(x.len(), self.dim, "compressor dimension mismatch");
        let d = self.dim;
        match self.kind {
            CompressorKind::Identity => DenseVector::from_vec(x.to_vec()).to_sparse_full(),
            CompressorKind::RandK { k } => {
                let mut indices = sample_subset(d, k, rng);
                indices.sort_unstable();
                let scale = d as f64 / k as f64;
                let values = indices.iter().map(|&i| scale * x[i]).collect();
                SparseVector::from_sorted_unchecked(d, indices, values)
            }
            CompressorKind::L2Quant => {
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return SparseVector::empty(d);
                }
                let mut indices = Vec::new();
                let mut values = Vec::new();
                for (i, &xi) in x.iter().enumerate() {
                    // one draw per coordinate keeps stream consumption independent of x
                    let keep = rng.bernoulli(xi.abs() / norm);
                    if keep && xi != 0.0 {
                        indices.push(i);
                        values.push(norm * xi.signum());
                    }
                }
                SparseVector::from_sorted_unchecked(d, indices, values)
            }
        }
    }

    /// All outcomes of `Q(x)` with their probabilities.
    pub fn enumerate_outcomes(&self, x: &[f64]) -> Result<Vec<(f64, SparseVector)>> {
        if x.len() != self.dim {
            return Err(Error::usage(format!(
                "dimension mismatch: {} vs {}",
                x.len(),
                self.dim
            )));
        }
        let d = self.dim;
        match self.kind {
            CompressorKind::Identity => Ok(vec![(1.0, DenseVector::from_vec(x.to_vec()).to_sparse_full())]),
            CompressorKind::RandK { k } => {
                let count = binomial(d, k);
                if count > MAX_OUTCOMES as u128 {
                    return Err(Error::Capability(format!(
                        "rand_k outcome space C({d},{k}) = {count} exceeds {MAX_OUTCOMES}"
                    )));
                }
                let prob = 1.0 / count as f64;
                let scale = d as f64 / k as f64;
                Ok(k_subsets(d, k)
                    .into_iter()
                    .map(|s| {
                        let values = s.iter().map(|&i| scale * x[i]).collect();
                        (prob, SparseVector::from_sorted_unchecked(d, s, values))
                    })
                    .collect())
            }
            CompressorKind::L2Quant => {
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Ok(vec![(1.0, SparseVector::empty(d))]);
                }
                let support: Vec<usize> = (0..d).filter(|&i| x[i] != 0.0).collect();
                if support.len() >= 64 || (1usize << support.len()) > MAX_OUTCOMES {
                    return Err(Error::Capability(format!(
                        "l2_quant outcome space 2^{} exceeds {MAX_OUTCOMES}",
                        support.len()
                    )));
                }
                let mut out = Vec::with_capacity(1 << support.len());
                for mask in 0usize..(1 << support.len()) {
                    let mut prob = 1.0;
                    let mut indices = Vec::new();
                    let mut values = Vec::new();
                    for (bit, &i) in support.iter().enumerate() {
                        let q = x[i].abs() / norm;
                        if mask >> bit & 1 == 1 {
                            prob *= q;
                            indices.push(i);
                            values.push(norm * x[i].signum());
                        } else {
                            prob *= 1.0 - q;
                        }
                    }
                    out.push((prob, SparseVector::from_sorted_unchecked(d, indices, values)));
                }
                Ok(out)
            }
        }
    }
}

/// Partial Fisher–Yates: the first `k` entries of a shuffled `0..d`.
fn sample_subset(d: usize, k: usize, rng: &mut RngStream) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..d).collect();
    for i in 0..k {
        let j = i + rng.below(d - i);
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Ascending k-subsets of `0..n` in lexicographic order.
fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // rightmost position that can still advance
        let Some(pos) = (0..k).rev().find(|&p| cur[p] < n - k + p) else {
            return out;
        };
        cur[pos] += 1;
        for q in pos + 1..k {
            cur[q] = cur[q - 1] + 1;
        }
    }
}
