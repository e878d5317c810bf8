//! Objectives with worker-indexed gradient oracles.
//!
//! A problem is `f(x) = (1/n) Σ_i f_i(x)` over `n` workers, where each local
//! function is itself a finite sum `f_i(x) = (1/m) Σ_j f_ij(x)`. The same
//! problem can be consumed in *online* mode, where a stochastic gradient of
//! `f_i` is produced from a drawn [`Sample`]; by default a sample is a
//! uniformly drawn component, and [`GaussianNoise`] replaces that with an
//! additive-noise oracle.

mod classification;
mod constants;
mod dataset;
mod loss;
mod noise;
mod quadratic;

pub use classification::ClassificationProblem;
pub use constants::{aggregate_smoothness, Constants};
pub use dataset::{parse_libsvm, parse_libsvm_file, write_libsvm, Dataset, Row, SyntheticClassification};
pub use loss::{logsq_loss, logsq_loss_derivative, logsq_loss_second_derivative, CURVATURE_BOUND, SLOPE_BOUND};
pub use noise::GaussianNoise;
pub use quadratic::{QuadraticPlProblem, QuadraticSpec};

use crate::numcore::{mean_dense, DenseVector, RngStream};

/// Randomness behind one stochastic gradient evaluation. The same sample can
/// be evaluated at several points, which online variance reduction relies on.
#[derive(Clone, Debug, PartialEq)]
pub enum Sample {
    /// Gradient of component `j` of the worker's finite sum.
    Component(usize),
    /// Exact local gradient plus the stored additive perturbation.
    Noise(Vec<f64>),
}

pub trait Problem: Send + Sync {
    fn dim(&self) -> usize;

    fn num_workers(&self) -> usize;

    /// Components per worker (`m`).
    fn num_components(&self) -> usize;

    fn component_value(&self, worker: usize, component: usize, x: &[f64]) -> f64;

    fn component_grad(&self, worker: usize, component: usize, x: &[f64]) -> DenseVector;

    fn constants(&self) -> &Constants;

    /// `f_i(x)` and `∇f_i(x)` in one pass.
    fn worker_value_grad(&self, worker: usize, x: &[f64]) -> (f64, DenseVector) {
        let m = self.num_components();
        let mut value = 0.0;
        let mut grad = DenseVector::zeros(self.dim());
        for j in 0..m {
            value += self.component_value(worker, j, x);
            let g = self.component_grad(worker, j, x);
            for (a, b) in grad.iter_mut().zip(g.iter()) {
                *a += b;
            }
        }
        grad.scale(1.0 / m as f64);
        (value / m as f64, grad)
    }

    fn worker_value(&self, worker: usize, x: &[f64]) -> f64 {
        self.worker_value_grad(worker, x).0
    }

    fn worker_grad(&self, worker: usize, x: &[f64]) -> DenseVector {
        self.worker_value_grad(worker, x).1
    }

    fn value(&self, x: &[f64]) -> f64 {
        let n = self.num_workers();
        (0..n).map(|i| self.worker_value(i, x)).sum::<f64>() / n as f64
    }

    fn grad(&self, x: &[f64]) -> DenseVector {
        let grads: Vec<DenseVector> = (0..self.num_workers())
            .map(|i| self.worker_grad(i, x))
            .collect();
        mean_dense(&grads)
    }

    /// `f(x) - f_*`. Problems with a known minimiser may compute this
    /// without the cancellation of subtracting two nearly equal values.
    fn optimality_gap(&self, x: &[f64]) -> f64 {
        self.optimality_gap_given(x, self.value(x))
    }

    /// `f(x) - f_*` when `value = f(x)` is already known.
    fn optimality_gap_given(&self, _x: &[f64], value: f64) -> f64 {
        value - self.constants().lower_bound
    }

    fn draw_sample(&self, _worker: usize, rng: &mut RngStream) -> Sample {
        Sample::Component(rng.below(self.num_components()))
    }

    fn sample_grad(&self, worker: usize, sample: &Sample, x: &[f64]) -> DenseVector {
        match sample {
            Sample::Component(j) => self.component_grad(worker, *j, x),
            Sample::Noise(noise) => {
                let mut g = self.worker_grad(worker, x);
                if !noise.is_empty() {
                    for (a, b) in g.iter_mut().zip(noise) {
                        *a += b;
                    }
                }
                g
            }
        }
    }
}

impl<P: Problem + ?Sized> Problem for Box<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn num_workers(&self) -> usize {
        (**self).num_workers()
    }
    fn num_components(&self) -> usize {
        (**self).num_components()
    }
    fn component_value(&self, worker: usize, component: usize, x: &[f64]) -> f64 {
        (**self).component_value(worker, component, x)
    }
    fn component_grad(&self, worker: usize, component: usize, x: &[f64]) -> DenseVector {
        (**self).component_grad(worker, component, x)
    }
    fn constants(&self) -> &Constants {
        (**self).constants()
    }
    fn worker_value_grad(&self, worker: usize, x: &[f64]) -> (f64, DenseVector) {
        (**self).worker_value_grad(worker, x)
    }
    fn worker_value(&self, worker: usize, x: &[f64]) -> f64 {
        (**self).worker_value(worker, x)
    }
    fn worker_grad(&self, worker: usize, x: &[f64]) -> DenseVector {
        (**self).worker_grad(worker, x)
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn grad(&self, x: &[f64]) -> DenseVector {
        (**self).grad(x)
    }
    fn optimality_gap(&self, x: &[f64]) -> f64 {
        (**self).optimality_gap(x)
    }
    fn optimality_gap_given(&self, x: &[f64], value: f64) -> f64 {
        (**self).optimality_gap_given(x, value)
    }
    fn draw_sample(&self, worker: usize, rng: &mut RngStream) -> Sample {
        (**self).draw_sample(worker, rng)
    }
    fn sample_grad(&self, worker: usize, sample: &Sample, x: &[f64]) -> DenseVector {
        (**self).sample_grad(worker, sample, x)
    }
}
