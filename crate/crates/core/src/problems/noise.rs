use super::{Constants, Problem, Sample};
use crate::error::{Error, Result};
use crate::numcore::{DenseVector, RngStream};

/// Online oracle `∇f_ξ(x) = ∇f_i(x) + ξ` with `ξ ~ N(0, s² I)`.
///
/// `s` is the per-coordinate standard deviation, so the variance bound is
/// `σ_i² = d·s²`. A sample evaluated at two points carries the same `ξ`,
/// hence stochastic gradient differences are exact.
#[derive(Clone, Debug)]
pub struct GaussianNoise<P> {
    inner: P,
    coord_std: f64,
    constants: Constants,
}

impl<P: Problem> GaussianNoise<P> {
    pub fn new(inner: P, coord_std: f64) -> Result<Self> {
        if !(coord_std >= 0.0) || !coord_std.is_finite() {
            return Err(Error::usage(format!("noise std must be finite and >= 0, got {coord_std}")));
        }
        let base = inner.constants();
        let var = inner.dim() as f64 * coord_std * coord_std;
        let constants = Constants::new(
            base.worker_smoothness.clone(),
            // the noise cancels in differences; only the component spread remains,
            // and the exact local gradient has none
            vec![0.0; inner.num_workers()],
            vec![var; inner.num_workers()],
            base.pl,
            base.lower_bound,
        );
        Ok(GaussianNoise {
            inner,
            coord_std,
            constants,
        })
    }

    /// Noise level giving total variance `sigma_sq` per worker.
    pub fn with_variance(inner: P, sigma_sq: f64) -> Result<Self> {
        let d = inner.dim() as f64;
        Self::new(inner, (sigma_sq / d).sqrt())
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    pub fn coord_std(&self) -> f64 {
        self.coord_std
    }
}

impl<P: Problem> Problem for GaussianNoise<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn num_workers(&self) -> usize {
        self.inner.num_workers()
    }

    fn num_components(&self) -> usize {
        self.inner.num_components()
    }

    fn component_value(&self, worker: usize, component: usize, x: &[f64]) -> f64 {
        self.inner.component_value(worker, component, x)
    }

    fn component_grad(&self, worker: usize, component: usize, x: &[f64]) -> DenseVector {
        self.inner.component_grad(worker, component, x)
    }

    fn constants(&self) -> &Constants {
        &self.constants
    }

    fn worker_value_grad(&self, worker: usize, x: &[f64]) -> (f64, DenseVector) {
        self.inner.worker_value_grad(worker, x)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x)
    }

    fn optimality_gap_given(&self, x: &[f64], value: f64) -> f64 {
        self.inner.optimality_gap_given(x, value)
    }

    fn draw_sample(&self, _worker: usize, rng: &mut RngStream) -> Sample {
        if self.coord_std == 0.0 {
            return Sample::Noise(Vec::new());
        }
        Sample::Noise(
            (0..self.dim())
                .map(|_| self.coord_std * rng.standard_normal())
                .collect(),
        )
    }
}
