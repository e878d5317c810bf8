use std::ops::{Deref, DerefMut, Index};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real vector: model parameters, gradients and estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn zeros(dim: usize) -> Self {
        DenseVector(vec![0.0; dim])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        DenseVector(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn sq_norm(&self) -> f64 {
        sq_norm(&self.0)
    }

    pub fn norm(&self) -> f64 {
        self.sq_norm().sqrt()
    }

    pub fn dot(&self, other: &DenseVector) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok(dot(&self.0, &other.0))
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &DenseVector) -> Result<()> {
        check_dims(self.dim(), other.dim())?;
        axpy(alpha, &other.0, &mut self.0);
        Ok(())
    }

    /// `self - other` as a new vector.
    pub fn sub(&self, other: &DenseVector) -> Result<DenseVector> {
        check_dims(self.dim(), other.dim())?;
        Ok(DenseVector(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn scale(&mut self, alpha: f64) {
        self.0.iter_mut().for_each(|v| *v *= alpha);
    }

    /// Adds the listed entries of `sparse` into `self`; other coordinates are untouched.
    pub fn scatter_add(&mut self, sparse: &SparseVector) -> Result<()> {
        check_dims(self.dim(), sparse.dim())?;
        for (i, v) in sparse.iter() {
            self.0[i] += v;
        }
        Ok(())
    }

    pub fn sq_dist(&self, other: &DenseVector) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    /// Sparse view listing every coordinate, zeros included.
    pub fn to_sparse_full(&self) -> SparseVector {
        SparseVector {
            dim: self.dim(),
            indices: (0..self.dim()).collect(),
            values: self.0.clone(),
        }
    }
}

impl Deref for DenseVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for DenseVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(values: Vec<f64>) -> Self {
        DenseVector(values)
    }
}

/// Index/value pairs over a `dim`-dimensional space.
///
/// Indices are strictly increasing. The entry count is the number of
/// coordinates a compressor *selected*, which may include explicit zeros;
/// that count is what communication accounting charges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn empty(dim: usize) -> Self {
        SparseVector {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a sparse vector, validating the index invariants.
    pub fn new(dim: usize, indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::usage(format!(
                "sparse vector has {} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::usage("sparse indices must be strictly increasing"));
        }
        if let Some(&last) = indices.last() {
            if last >= dim {
                return Err(Error::usage(format!(
                    "sparse index {last} out of range for dimension {dim}"
                )));
            }
        }
        Ok(SparseVector {
            dim,
            indices,
            values,
        })
    }

    /// Caller guarantees sorted, in-range, unique indices.
    pub(crate) fn from_sorted_unchecked(dim: usize, indices: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(indices.last().map_or(true, |&i| i < dim));
        SparseVector {
            dim,
            indices,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored entries (the accounting count).
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn sq_norm(&self) -> f64 {
        sq_norm(&self.values)
    }

    pub fn dot_dense(&self, dense: &[f64]) -> Result<f64> {
        check_dims(self.dim, dense.len())?;
        Ok(self.iter().map(|(i, v)| v * dense[i]).sum())
    }

    pub fn to_dense(&self) -> DenseVector {
        let mut out = DenseVector::zeros(self.dim);
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}

impl Index<usize> for SparseVector {
    type Output = f64;

    /// Value at coordinate `i` (zero when not stored).
    fn index(&self, i: usize) -> &f64 {
        match self.indices.binary_search(&i) {
            Ok(pos) => &self.values[pos],
            Err(_) => &0.0,
        }
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::usage(format!("dimension mismatch: {a} vs {b}")));
    }
    Ok(())
}

pub fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Mean of equally sized vectors, summed in slice order and scaled by `1/len`.
///
/// Every average over workers goes through this function so that identical
/// inputs always produce bitwise identical results.
pub fn mean_dense(vectors: &[DenseVector]) -> DenseVector {
    assert!(!vectors.is_empty(), "mean of zero vectors");
    let mut acc = vectors[0].clone();
    for v in &vectors[1..] {
        debug_assert_eq!(v.dim(), acc.dim());
        for (a, b) in acc.iter_mut().zip(v.iter()) {
            *a += b;
        }
    }
    acc.scale(1.0 / vectors.len() as f64);
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sq_norm_pythagorean() {
        assert_eq!(DenseVector::from_vec(vec![3.0, 4.0]).sq_norm(), 25.0);
        assert_eq!(DenseVector::zeros(7).sq_norm(), 0.0);
    }

    #[test]
    fn scatter_add_touches_listed_indices_only() {
        let mut dense = DenseVector::from_vec(vec![1.0, 1.0, 1.0]);
        let sparse = SparseVector::new(3, vec![0], vec![2.0]).unwrap();
        dense.scatter_add(&sparse).unwrap();
        assert_eq!(dense.as_slice(), &[3.0, 1.0, 1.0]);
    }

    #[test]
    fn dimension_mismatch_is_usage_error() {
        let a = DenseVector::zeros(2);
        let b = DenseVector::zeros(3);
        assert!(matches!(a.dot(&b), Err(Error::Usage(_))));
        let mut a = a;
        let s = SparseVector::empty(3);
        assert!(matches!(a.scatter_add(&s), Err(Error::Usage(_))));
    }

    #[test]
    fn sparse_rejects_bad_indices() {
        assert!(SparseVector::new(3, vec![1, 1], vec![0.0, 0.0]).is_err());
        assert!(SparseVector::new(3, vec![2, 1], vec![0.0, 0.0]).is_err());
        assert!(SparseVector::new(3, vec![3], vec![0.0]).is_err());
        assert!(SparseVector::new(3, vec![0], vec![]).is_err());
    }

    #[test]
    fn sparse_index_reads_zero_off_support() {
        let s = SparseVector::new(4, vec![1, 3], vec![5.0, -1.0]).unwrap();
        assert_eq!(s[1], 5.0);
        assert_eq!(s[2], 0.0);
        assert_eq!(s.nnz(), 2);
    }

    proptest! {
        #[test]
        fn densify_of_full_sparsify_is_identity(v in prop::collection::vec(-1e6f64..1e6, 0..40)) {
            let dense = DenseVector::from_vec(v);
            prop_assert_eq!(dense.to_sparse_full().to_dense(), dense);
        }
    }
}
