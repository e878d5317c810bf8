use serde::Serialize;

/// Smoothness, variance and lower-bound constants of a problem.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Constants {
    /// `L_i`: Lipschitz constant of `∇f_i`.
    pub worker_smoothness: Vec<f64>,
    /// `L = sqrt((1/n) Σ L_i²)`.
    pub smoothness: f64,
    /// `𝓛_i`: average smoothness of minibatch gradient differences.
    pub worker_avg_smoothness: Vec<f64>,
    /// `𝓛 = sqrt((1/n) Σ 𝓛_i²)`.
    pub avg_smoothness: f64,
    /// `σ_i²`: variance bound of the online stochastic oracle.
    pub worker_variance: Vec<f64>,
    /// PL constant, when the problem satisfies the PL inequality.
    pub pl: Option<f64>,
    /// `f_*`, a uniform lower bound on `f`.
    pub lower_bound: f64,
}

impl Constants {
    pub fn new(
        worker_smoothness: Vec<f64>,
        worker_avg_smoothness: Vec<f64>,
        worker_variance: Vec<f64>,
        pl: Option<f64>,
        lower_bound: f64,
    ) -> Self {
        Constants {
            smoothness: aggregate_smoothness(&worker_smoothness),
            avg_smoothness: aggregate_smoothness(&worker_avg_smoothness),
            worker_smoothness,
            worker_avg_smoothness,
            worker_variance,
            pl,
            lower_bound,
        }
    }

    /// `σ² = (1/n) Σ σ_i²`.
    pub fn variance(&self) -> f64 {
        if self.worker_variance.is_empty() {
            return 0.0;
        }
        self.worker_variance.iter().sum::<f64>() / self.worker_variance.len() as f64
    }
}

/// Quadratic mean `sqrt((1/n) Σ c_i²)`.
pub fn aggregate_smoothness(per_worker: &[f64]) -> f64 {
    if per_worker.is_empty() {
        return 0.0;
    }
    (per_worker.iter().map(|c| c * c).sum::<f64>() / per_worker.len() as f64).sqrt()
}
