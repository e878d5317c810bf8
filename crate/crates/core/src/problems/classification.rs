use super::loss::{logsq_loss, logsq_loss_derivative, CURVATURE_BOUND, SLOPE_BOUND};
use super::{Constants, Dataset, Problem, Row};
use crate::error::{Error, Result};
use crate::numcore::DenseVector;

/// Binary classification with the squared-sigmoid loss, sharded over workers.
///
/// Rows are split contiguously into `n` shards of `m = ⌊N/n⌋` rows; the last
/// `N - n·m` rows are dropped. `f_ij(x) = ℓ(a_jᵀx, y_j)` on worker `i`'s shard.
#[derive(Clone, Debug)]
pub struct ClassificationProblem {
    rows: Vec<Row>,
    dim: usize,
    workers: usize,
    per_worker: usize,
    constants: Constants,
}

impl ClassificationProblem {
    pub fn new(data: Dataset, workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::usage("need at least one worker"));
        }
        if data.len() < workers {
            return Err(Error::usage(format!(
                "{} rows cannot be split over {workers} workers",
                data.len()
            )));
        }
        let per_worker = data.len() / workers;
        let dim = data.dim();
        let mut rows = data.rows().to_vec();
        rows.truncate(per_worker * workers);
        let constants = smoothness_constants(&rows, workers, per_worker);
        Ok(ClassificationProblem {
            rows,
            dim,
            workers,
            per_worker,
            constants,
        })
    }

    /// Rows owned by `worker`.
    pub fn shard(&self, worker: usize) -> &[Row] {
        &self.rows[worker * self.per_worker..(worker + 1) * self.per_worker]
    }

    fn row(&self, worker: usize, component: usize) -> &Row {
        &self.rows[worker * self.per_worker + component]
    }
}

/// Per-worker constants from row norms.
///
/// The Hessian of `f_ij` is `ℓ''·a_j a_jᵀ`, so `L_ij = c_ℓ‖a_j‖²` with
/// `c_ℓ = max|ℓ''|`. Both `L_i` and `𝓛_i` are bounded by `max_j L_ij`.
/// The row-sampling oracle has variance at most `(max|ℓ'|)² · mean_j ‖a_j‖²`.
fn smoothness_constants(rows: &[Row], workers: usize, per_worker: usize) -> Constants {
    let mut smooth = Vec::with_capacity(workers);
    let mut variance = Vec::with_capacity(workers);
    for shard in rows.chunks(per_worker) {
        let norms: Vec<f64> = shard.iter().map(|r| r.features.sq_norm()).collect();
        let max = norms.iter().cloned().fold(0.0, f64::max);
        smooth.push(CURVATURE_BOUND * max);
        let mean = norms.iter().sum::<f64>() / norms.len() as f64;
        variance.push(SLOPE_BOUND * SLOPE_BOUND * mean);
    }
    Constants::new(smooth.clone(), smooth, variance, None, 0.0)
}

impl Problem for ClassificationProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_workers(&self) -> usize {
        self.workers
    }

    fn num_components(&self) -> usize {
        self.per_worker
    }

    fn component_value(&self, worker: usize, component: usize, x: &[f64]) -> f64 {
        let row = self.row(worker, component);
        let margin = row.features.dot_dense(x).expect("dimension checked at construction");
        logsq_loss(margin, row.label)
    }

    fn component_grad(&self, worker: usize, component: usize, x: &[f64]) -> DenseVector {
        let row = self.row(worker, component);
        let margin = row.features.dot_dense(x).expect("dimension checked at construction");
        let coef = logsq_loss_derivative(margin, row.label);
        let mut g = DenseVector::zeros(self.dim);
        for (i, v) in row.features.iter() {
            g[i] = coef * v;
        }
        g
    }

    fn worker_value_grad(&self, worker: usize, x: &[f64]) -> (f64, DenseVector) {
        let mut value = 0.0;
        let mut grad = DenseVector::zeros(self.dim);
        for row in self.shard(worker) {
            let mut margin = 0.0;
            for (i, v) in row.features.iter() {
                margin += v * x[i];
            }
            value += logsq_loss(margin, row.label);
            let coef = logsq_loss_derivative(margin, row.label);
            for (i, v) in row.features.iter() {
                grad[i] += coef * v;
            }
        }
        let m = self.per_worker as f64;
        grad.scale(1.0 / m);
        (value / m, grad)
    }

    fn constants(&self) -> &Constants {
        &self.constants
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{grad_check, RngStream, SparseVector};
    use crate::problems::SyntheticClassification;

    fn dataset(rows: usize) -> Dataset {
        SyntheticClassification {
            rows,
            dim: 6,
            flip_prob: 0.1,
            seed: 9,
        }
        .generate()
        .unwrap()
    }

    fn random_point(rng: &mut RngStream, d: usize, scale: f64) -> Vec<f64> {
        (0..d).map(|_| scale * rng.standard_normal()).collect()
    }

    #[test]
    fn mushrooms_shape_shards() {
        let rows: Vec<Row> = (0..8120)
            .map(|t| Row {
                features: SparseVector::new(1, vec![0], vec![t as f64 * 1e-4]).unwrap(),
                label: 1.0,
            })
            .collect();
        let p = ClassificationProblem::new(Dataset::new(rows, 1).unwrap(), 5).unwrap();
        assert_eq!(p.num_components(), 1624);
        for i in 0..5 {
            assert_eq!(p.shard(i).len(), 1624);
        }
    }

    #[test]
    fn remainder_rows_dropped_order_preserved() {
        let data = dataset(11);
        let p = ClassificationProblem::new(data.clone(), 5).unwrap();
        assert_eq!(p.num_components(), 2);
        let kept: Vec<&Row> = (0..5).flat_map(|i| p.shard(i).iter()).collect();
        assert_eq!(kept.len(), 10);
        for (t, row) in kept.iter().enumerate() {
            assert_eq!(**row, data.rows()[t]);
        }
    }

    #[test]
    fn single_worker_owns_everything() {
        let p = ClassificationProblem::new(dataset(13), 1).unwrap();
        assert_eq!(p.num_components(), 13);
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(
            ClassificationProblem::new(dataset(3), 5),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn averages_are_consistent() {
        let p = ClassificationProblem::new(dataset(40), 4).unwrap();
        let mut rng = RngStream::new(1, "x");
        for _ in 0..10 {
            let x = random_point(&mut rng, 6, 1.0);
            for i in 0..4 {
                let by_components =
                    (0..p.num_components()).map(|j| p.component_value(i, j, &x)).sum::<f64>()
                        / p.num_components() as f64;
                assert!((p.worker_value(i, &x) - by_components).abs() < 1e-12);
            }
            let by_workers = (0..4).map(|i| p.worker_value(i, &x)).sum::<f64>() / 4.0;
            assert!((p.value(&x) - by_workers).abs() < 1e-12);
        }
    }

    #[test]
    fn oracles_pass_grad_check() {
        let p = ClassificationProblem::new(dataset(40), 4).unwrap();
        let mut rng = RngStream::new(2, "x");
        for _ in 0..10 {
            let x = random_point(&mut rng, 6, 2.0);
            for i in 0..4 {
                let e = grad_check(
                    |y| p.worker_value(i, y),
                    |y| p.worker_grad(i, y).into_vec(),
                    &x,
                    1e-5,
                )
                .unwrap();
                assert!(e <= 1e-5, "{e}");
                let e = grad_check(
                    |y| p.component_value(i, 1, y),
                    |y| p.component_grad(i, 1, y).into_vec(),
                    &x,
                    1e-5,
                )
                .unwrap();
                assert!(e <= 1e-5, "{e}");
            }
            let e = grad_check(|y| p.value(y), |y| p.grad(y).into_vec(), &x, 1e-5).unwrap();
            assert!(e <= 1e-5, "{e}");
        }
    }

    #[test]
    fn lower_bound_zero_holds() {
        let p = ClassificationProblem::new(dataset(20), 2).unwrap();
        let mut rng = RngStream::new(4, "x");
        for _ in 0..100 {
            let x = random_point(&mut rng, 6, 10.0);
            assert!(p.value(&x) >= p.constants().lower_bound);
        }
    }

    #[test]
    fn smoothness_spot_check() {
        let p = ClassificationProblem::new(dataset(30), 3).unwrap();
        let mut rng = RngStream::new(5, "x");
        for _ in 0..100 {
            let x = random_point(&mut rng, 6, 3.0);
            let y = random_point(&mut rng, 6, 3.0);
            let dist = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            for i in 0..3 {
                let diff = p.worker_grad(i, &x).sub(&p.worker_grad(i, &y)).unwrap().norm();
                assert!(diff <= p.constants().worker_smoothness[i] * dist * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn row_sampling_mean_is_full_gradient() {
        let p = ClassificationProblem::new(dataset(24), 3).unwrap();
        let x = vec![0.3, -0.2, 0.5, 1.0, -1.0, 0.0];
        for i in 0..3 {
            let samples: Vec<DenseVector> = (0..p.num_components())
                .map(|j| p.sample_grad(i, &crate::problems::Sample::Component(j), &x))
                .collect();
            let mean = crate::numcore::mean_dense(&samples);
            let full = p.worker_grad(i, &x);
            assert!(mean.sq_dist(&full).unwrap().sqrt() < 1e-14);
        }
    }
}
