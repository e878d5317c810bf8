//! GD, MARINA, VR-MARINA (finite-sum and online) and PP-MARINA.
//!
//! Every engine simulates one server and `n` workers in lock step. At step
//! `k` the server draws the coin `c_k ~ Be(p)`, broadcasts `g^k` together
//! with the coin (`d + 1` floats per worker) and moves to
//! `x^{k+1} = x^k − γ g^k`. Workers then either send a fresh dense local
//! estimator (`c_k = 1`) or a compressed estimate of their gradient
//! difference (`c_k = 0`), and the server aggregates the payloads in
//! ascending worker order.
//!
//! Record `k` of a [`Trace`] describes `x^k`, `g^k` and the coin drawn at
//! step `k`; its cumulative counters include all traffic and oracle calls
//! made before `x^k` existed, including the initial dense `g⁰`. The last
//! record (`k = K`) has no coin.
//!
//! Diagnostics (`f`, `‖∇f‖²`, `‖g − ∇f‖²`, `Φ`) use exact full gradients and
//! are never charged to either counter.

mod engine;

use serde::{Deserialize, Serialize};

use crate::compress::Compressor;
use crate::error::{Error, Result};
use crate::numcore::{DenseVector, RngStream};
use crate::problems::Problem;
use crate::theory::LyapunovMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Gd,
    Marina,
    VrMarinaFs,
    VrMarinaOnline,
    PpMarina,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gd => "gd",
            Algorithm::Marina => "marina",
            Algorithm::VrMarinaFs => "vr_marina_fs",
            Algorithm::VrMarinaOnline => "vr_marina_online",
            Algorithm::PpMarina => "pp_marina",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gd" => Algorithm::Gd,
            "marina" => Algorithm::Marina,
            "vr_marina_fs" => Algorithm::VrMarinaFs,
            "vr_marina_online" => Algorithm::VrMarinaOnline,
            "pp_marina" => Algorithm::PpMarina,
            other => return Err(Error::usage(format!("unknown algorithm {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub p: f64,
    /// `K`.
    pub iterations: usize,
    /// `b`: online batch for `g⁰` and dense rounds.
    pub batch: usize,
    /// `b′`: samples per compressed difference.
    pub minibatch: usize,
    /// `r`: clients per compressed partial-participation round.
    pub clients: usize,
    pub seed: u64,
    pub compressor: Compressor,
    pub x0: DenseVector,
    pub bits_per_float: u32,
    /// Form of `Φ` stored in the records.
    pub lyapunov_mode: LyapunovMode,
    /// Keep every `x^k`, `g^k` and sampled index set in [`Trace::log`].
    #[serde(default)]
    pub log_iterates: bool,
}

impl RunConfig {
    /// Defaults: `b = b′ = r = 1`, seed 0, 64-bit floats, nonconvex `Φ`.
    pub fn new(algorithm: Algorithm, gamma: f64, p: f64, iterations: usize, compressor: Compressor, x0: DenseVector) -> Self {
        RunConfig {
            algorithm,
            gamma,
            p,
            iterations,
            batch: 1,
            minibatch: 1,
            clients: 1,
            seed: 0,
            compressor,
            x0,
            bits_per_float: 64,
            lyapunov_mode: LyapunovMode::Nonconvex,
            log_iterates: false,
        }
    }

    pub fn validate<P: Problem + ?Sized>(&self, problem: &P) -> Result<()> {
        let d = problem.dim();
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::usage(format!("gamma must be finite and >= 0, got {}", self.gamma)));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::usage(format!("p must lie in (0, 1], got {}", self.p)));
        }
        if self.iterations == 0 {
            return Err(Error::usage("iterations must be at least 1"));
        }
        if self.x0.dim() != d {
            return Err(Error::usage(format!("x0 has dimension {} but the problem has {d}", self.x0.dim())));
        }
        if self.compressor.dim() != d {
            return Err(Error::usage(format!(
                "compressor has dimension {} but the problem has {d}",
                self.compressor.dim()
            )));
        }
        match self.algorithm {
            Algorithm::VrMarinaFs => {
                let m = problem.num_components();
                if self.minibatch == 0 || self.minibatch > m {
                    return Err(Error::usage(format!("minibatch b' must lie in 1..={m}, got {}", self.minibatch)));
                }
            }
            Algorithm::VrMarinaOnline => {
                if self.batch == 0 || self.minibatch == 0 {
                    return Err(Error::usage("online batch sizes b and b' must be positive"));
                }
                if self.minibatch > self.batch {
                    log::warn!("minibatch b'={} exceeds batch b={}", self.minibatch, self.batch);
                }
            }
            Algorithm::PpMarina => {
                let n = problem.num_workers();
                if self.clients == 0 || self.clients > n {
                    return Err(Error::usage(format!("clients r must lie in 1..={n}, got {}", self.clients)));
                }
            }
            Algorithm::Gd | Algorithm::Marina => {}
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub f_value: f64,
    pub grad_sq_norm: f64,
    /// Coin drawn at step `k`; `None` for the final record.
    pub coin: Option<bool>,
    pub uplink_floats_cum: u64,
    pub downlink_floats_cum: u64,
    /// Summed over workers.
    pub oracle_calls_cum: u64,
    /// `‖g^k − ∇f(x^k)‖²`.
    pub est_err_sq: f64,
    pub lyapunov: f64,
    /// `‖x^{k+1} − x^k‖²`; `None` for the final record.
    pub step_sq_norm: Option<f64>,
}

/// Iterates and sampled index sets, kept when `log_iterates` is set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    /// `x^0..x^K`.
    pub xs: Vec<DenseVector>,
    /// `g^0..g^K`.
    pub gs: Vec<DenseVector>,
    /// Per step, per worker: sampled component indices of a compressed
    /// finite-sum round. Empty on dense rounds and for other algorithms.
    pub minibatches: Vec<Vec<Vec<usize>>>,
    /// Per step: sorted client draws of a compressed partial-participation round.
    pub clients: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub config: RunConfig,
    /// Records for `k = 0..=K`; shorter when the run diverged.
    pub records: Vec<IterationRecord>,
    /// Uniformly selected output iterate. A diverged run that never reached
    /// the selected index reports its last finite iterate instead.
    pub x_hat: DenseVector,
    pub x_hat_index: usize,
    /// `argmin_{k<K} ‖∇f(x^k)‖²`; a diagnostic, not the method's output.
    pub best_index: usize,
    pub log: Option<RunLog>,
}

impl Trace {
    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("a trace holds at least the initial record")
    }
}

/// Index of the returned iterate, uniform over `0..K`.
pub fn select_output(iterations: usize, rng: &mut RngStream) -> usize {
    assert!(iterations >= 1, "output selection needs K >= 1");
    rng.below(iterations)
}

pub fn gd_run<P: Problem + ?Sized>(problem: &P, config: &RunConfig) -> Result<Trace> {
    run_as(problem, config, Algorithm::Gd)
}

pub fn marina_run<P: Problem + ?Sized>(problem: &P, config: &RunConfig) -> Result<Trace> {
    run_as(problem, config, Algorithm::Marina)
}

pub fn vr_marina_fs_run<P: Problem + ?Sized>(problem: &P, config: &RunConfig) -> Result<Trace> {
    run_as(problem, config, Algorithm::VrMarinaFs)
}

pub fn vr_marina_online_run<P: Problem + ?Sized>(problem: &P, config: &RunConfig) -> Result<Trace> {
    run_as(problem, config, Algorithm::VrMarinaOnline)
}

pub fn pp_marina_run<P: Problem + ?Sized>(problem: &P, config: &RunConfig) -> Result<Trace> {
    run_as(problem, config, Algorithm::PpMarina)
}

/// Runs `config.algorithm`.
pub fn run<P: Problem + ?Sized>(problem: &P, config: &RunConfig) -> Result<Trace> {
    config.validate(problem)?;
    engine::execute(problem, config)
}

fn run_as<P: Problem + ?Sized>(problem: &P, config: &RunConfig, algorithm: Algorithm) -> Result<Trace> {
    if config.algorithm == algorithm {
        return run(problem, config);
    }
    let mut config = config.clone();
    config.algorithm = algorithm;
    run(problem, &config)
}

pub use engine::{marina_step, MarinaState, Streams};

/// Slack of the one-step descent inequality
/// `f(x^{k+1}) ≤ f(x^k) − γ/2‖∇f(x^k)‖² − (1/(2γ) − L/2)‖x^{k+1} − x^k‖² + γ/2‖g^k − ∇f(x^k)‖²`
/// for every step of the trace. Nonnegative entries mean the inequality holds.
pub fn descent_slack(trace: &Trace, smoothness: f64) -> Vec<f64> {
    let gamma = trace.config.gamma;
    trace
        .records
        .windows(2)
        .map(|w| {
            let (now, next) = (&w[0], &w[1]);
            let step = now.step_sq_norm.unwrap_or(0.0);
            let rhs = now.f_value - 0.5 * gamma * now.grad_sq_norm - (0.5 / gamma - 0.5 * smoothness) * step
                + 0.5 * gamma * now.est_err_sq;
            rhs - next.f_value
        })
        .collect()
}
