use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Constants, Problem};
use crate::error::{Error, Result};
use crate::numcore::{dot, DenseVector, RngStream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSpec {
    pub mu: f64,
    pub l: f64,
    pub dim: usize,
    pub workers: usize,
    /// Components per worker; they share the Hessian and differ in the linear term.
    #[serde(default = "one")]
    pub components: usize,
}

fn one() -> usize {
    1
}

/// Sum of convex quadratics `f_ij(x) = ½xᵀA_i x − b_ijᵀx`.
///
/// Each `A_i = Q_i diag(λ) Q_iᵀ` with a random orthogonal `Q_i` and a spectrum
/// in `[μ, L]` that contains both endpoints (for `dim >= 2`), so `L_i = L`
/// exactly and the average Hessian has smallest eigenvalue at least `μ`.
#[derive(Clone, Debug)]
pub struct QuadraticPlProblem {
    dim: usize,
    workers: usize,
    components: usize,
    /// Row-major `dim × dim` Hessians.
    hessians: Vec<Vec<f64>>,
    spectra: Vec<Vec<f64>>,
    /// `linear[i][j]` is `b_ij`.
    linear: Vec<Vec<DenseVector>>,
    worker_linear: Vec<DenseVector>,
    mean_hessian: Vec<f64>,
    minimizer: DenseVector,
    constants: Constants,
}

impl QuadraticPlProblem {
    pub fn generate(spec: &QuadraticSpec, rng: &mut RngStream) -> Result<Self> {
        let QuadraticSpec {
            mu,
            l,
            dim,
            workers,
            components,
        } = *spec;
        if !(mu > 0.0) || !(l.is_finite()) {
            return Err(Error::usage(format!("need 0 < mu and finite L, got mu={mu}, L={l}")));
        }
        if mu > l {
            return Err(Error::usage(format!("mu={mu} exceeds L={l}")));
        }
        if dim == 0 || workers == 0 || components == 0 {
            return Err(Error::usage("dim, workers and components must be positive"));
        }

        let mut hessians = Vec::with_capacity(workers);
        let mut spectra = Vec::with_capacity(workers);
        for _ in 0..workers {
            let mut spectrum: Vec<f64> = (0..dim).map(|_| mu + (l - mu) * rng.uniform()).collect();
            spectrum[dim - 1] = l;
            if dim >= 2 {
                spectrum[0] = mu;
            }
            let gauss = DMatrix::from_fn(dim, dim, |_, _| rng.standard_normal());
            let q = gauss.qr().q();
            let a = &q * DMatrix::from_diagonal(&DVector::from_vec(spectrum.clone())) * q.transpose();
            // symmetrise away rounding so xᵀAx is an exact quadratic form
            let a = (&a + a.transpose()) * 0.5;
            hessians.push(row_major(&a));
            spectra.push(spectrum);
        }

        let linear: Vec<Vec<DenseVector>> = (0..workers)
            .map(|_| {
                (0..components)
                    .map(|_| DenseVector::from_vec((0..dim).map(|_| rng.standard_normal()).collect()))
                    .collect()
            })
            .collect();
        let worker_linear: Vec<DenseVector> = linear.iter().map(|b| mean(b, dim)).collect();
        let variance: Vec<f64> = linear
            .iter()
            .zip(&worker_linear)
            .map(|(bs, bbar)| {
                bs.iter().map(|b| b.sq_dist(bbar).unwrap()).sum::<f64>() / components as f64
            })
            .collect();

        let mut mean_hessian = vec![0.0; dim * dim];
        for h in &hessians {
            for (m, v) in mean_hessian.iter_mut().zip(h) {
                *m += v / workers as f64;
            }
        }
        let bbar = mean(&worker_linear, dim);
        let abar = DMatrix::from_row_slice(dim, dim, &mean_hessian);
        let chol = abar
            .cholesky()
            .ok_or_else(|| Error::Evaluation("average Hessian is not positive definite".into()))?;
        let xstar = chol.solve(&DVector::from_column_slice(bbar.as_slice()));
        let minimizer = DenseVector::from_vec(xstar.iter().copied().collect());
        let f_star = -0.5 * dot(bbar.as_slice(), minimizer.as_slice());

        let smooth: Vec<f64> = spectra
            .iter()
            .map(|s| s.iter().cloned().fold(f64::MIN, f64::max))
            .collect();
        let constants = Constants::new(smooth.clone(), smooth, variance, Some(mu), f_star);
        Ok(QuadraticPlProblem {
            dim,
            workers,
            components,
            hessians,
            spectra,
            linear,
            worker_linear,
            mean_hessian,
            minimizer,
            constants,
        })
    }

    pub fn minimizer(&self) -> &DenseVector {
        &self.minimizer
    }

    pub fn spectrum(&self, worker: usize) -> &[f64] {
        &self.spectra[worker]
    }

    /// Row-major Hessian of worker `i`.
    pub fn hessian(&self, worker: usize) -> &[f64] {
        &self.hessians[worker]
    }

    pub fn mean_hessian(&self) -> &[f64] {
        &self.mean_hessian
    }

    fn hess_vec(&self, worker: usize, x: &[f64]) -> Vec<f64> {
        matvec(&self.hessians[worker], x, self.dim)
    }
}

fn row_major(a: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = a.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(a[(i, j)]);
        }
    }
    out
}

fn matvec(a: &[f64], x: &[f64], d: usize) -> Vec<f64> {
    (0..d).map(|i| dot(&a[i * d..(i + 1) * d], x)).collect()
}

fn mean(vs: &[DenseVector], dim: usize) -> DenseVector {
    let mut acc = DenseVector::zeros(dim);
    for v in vs {
        acc.axpy(1.0, v).unwrap();
    }
    acc.scale(1.0 / vs.len() as f64);
    acc
}

impl Problem for QuadraticPlProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_workers(&self) -> usize {
        self.workers
    }

    fn num_components(&self) -> usize {
        self.components
    }

    fn component_value(&self, worker: usize, component: usize, x: &[f64]) -> f64 {
        let ax = self.hess_vec(worker, x);
        0.5 * dot(&ax, x) - dot(&self.linear[worker][component], x)
    }

    fn component_grad(&self, worker: usize, component: usize, x: &[f64]) -> DenseVector {
        let mut g = self.hess_vec(worker, x);
        for (gi, bi) in g.iter_mut().zip(self.linear[worker][component].iter()) {
            *gi -= bi;
        }
        DenseVector::from_vec(g)
    }

    fn worker_value_grad(&self, worker: usize, x: &[f64]) -> (f64, DenseVector) {
        let ax = self.hess_vec(worker, x);
        let b = &self.worker_linear[worker];
        let value = 0.5 * dot(&ax, x) - dot(b, x);
        let grad = ax.iter().zip(b.iter()).map(|(a, b)| a - b).collect();
        (value, DenseVector::from_vec(grad))
    }

    fn constants(&self) -> &Constants {
        &self.constants
    }

    fn optimality_gap_given(&self, x: &[f64], _value: f64) -> f64 {
        let e: Vec<f64> = x.iter().zip(self.minimizer.iter()).map(|(a, b)| a - b).collect();
        0.5 * dot(&matvec(&self.mean_hessian, &e, self.dim), &e)
    }
}
