use super::{select_output, Algorithm, IterationRecord, RunConfig, RunLog, Trace};
use crate::error::{Error, Result};
use crate::numcore::{mean_dense, rng, DenseVector, RngStream, SparseVector};
use crate::problems::{Problem, Sample};
use crate::theory::lyapunov_from_parts;

/// Iterates with a larger Euclidean norm count as diverged.
const DIVERGENCE_NORM: f64 = 1e12;

/// The named random streams of one run.
#[derive(Clone, Debug)]
pub struct Streams {
    pub coin: RngStream,
    pub compressors: Vec<RngStream>,
    pub minibatches: Vec<RngStream>,
    pub clients: RngStream,
    pub output: RngStream,
}

impl Streams {
    pub fn new(seed: u64, workers: usize) -> Self {
        Streams {
            coin: RngStream::new(seed, rng::COIN),
            compressors: (0..workers)
                .map(|i| RngStream::new(seed, &rng::compressor_label(i)))
                .collect(),
            minibatches: (0..workers)
                .map(|i| RngStream::new(seed, &rng::minibatch_label(i)))
                .collect(),
            clients: RngStream::new(seed, rng::CLIENTS),
            output: RngStream::new(seed, rng::OUTPUT_SELECT),
        }
    }
}

/// Server state between steps, plus the workers' cached local values and
/// gradients at the current iterate.
#[derive(Clone, Debug)]
pub struct MarinaState {
    pub k: usize,
    pub x: DenseVector,
    pub g: DenseVector,
    worker_values: Vec<f64>,
    worker_grads: Vec<DenseVector>,
    uplink: u64,
    downlink: u64,
    oracle: u64,
}

impl MarinaState {
    /// `x⁰` and `g⁰`, with the cost of the initial dense round charged.
    pub fn init<P: Problem + ?Sized>(problem: &P, config: &RunConfig, streams: &mut Streams) -> Result<Self> {
        let n = problem.num_workers();
        let x = config.x0.clone();
        let (worker_values, worker_grads) = evaluate(problem, &x);
        let f0 = mean_value(&worker_values);
        if !f0.is_finite() || !x.is_finite() {
            return Err(Error::Evaluation(format!("f(x0) = {f0} is not finite")));
        }
        let (g, per_worker_calls) = if config.algorithm == Algorithm::VrMarinaOnline {
            let estimates: Vec<DenseVector> = (0..n)
                .map(|i| {
                    let rng = &mut streams.minibatches[i];
                    batch_estimate(problem, i, &x, &worker_grads[i], config.batch, rng)
                })
                .collect();
            (mean_dense(&estimates), config.batch)
        } else {
            (mean_dense(&worker_grads), problem.num_components())
        };
        Ok(MarinaState {
            k: 0,
            x,
            g,
            worker_values,
            worker_grads,
            uplink: (n * problem.dim()) as u64,
            downlink: 0,
            oracle: (n * per_worker_calls) as u64,
        })
    }

    pub fn f_value(&self) -> f64 {
        mean_value(&self.worker_values)
    }

    /// Exact `∇f(x^k)`.
    pub fn full_grad(&self) -> DenseVector {
        mean_dense(&self.worker_grads)
    }

    fn record<P: Problem + ?Sized>(
        &self,
        problem: &P,
        config: &RunConfig,
        coin: Option<bool>,
        step_sq_norm: Option<f64>,
    ) -> IterationRecord {
        let f_value = self.f_value();
        let grad = self.full_grad();
        let est_err_sq = self.g.sq_dist(&grad).expect("estimator and gradient share the dimension");
        let gap = problem.optimality_gap_given(&self.x, f_value);
        IterationRecord {
            k: self.k,
            f_value,
            grad_sq_norm: grad.sq_norm(),
            coin,
            uplink_floats_cum: self.uplink,
            downlink_floats_cum: self.downlink,
            oracle_calls_cum: self.oracle,
            est_err_sq,
            lyapunov: lyapunov_from_parts(gap, est_err_sq, config.gamma, config.p, config.lyapunov_mode),
            step_sq_norm,
        }
    }
}

fn mean_value(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn evaluate<P: Problem + ?Sized>(problem: &P, x: &[f64]) -> (Vec<f64>, Vec<DenseVector>) {
    (0..problem.num_workers())
        .map(|i| problem.worker_value_grad(i, x))
        .unzip()
}

/// Stochastic gradient for `sample`, reusing the exact local gradient at `x`
/// for additive-noise samples.
fn stochastic_grad<P: Problem + ?Sized>(
    problem: &P,
    worker: usize,
    sample: &Sample,
    x: &[f64],
    exact: &DenseVector,
) -> DenseVector {
    match sample {
        Sample::Noise(noise) => {
            let mut g = exact.clone();
            for (a, b) in g.iter_mut().zip(noise) {
                *a += b;
            }
            g
        }
        Sample::Component(_) => problem.sample_grad(worker, sample, x),
    }
}

fn batch_estimate<P: Problem + ?Sized>(
    problem: &P,
    worker: usize,
    x: &[f64],
    exact: &DenseVector,
    batch: usize,
    rng: &mut RngStream,
) -> DenseVector {
    let mut acc = DenseVector::zeros(problem.dim());
    for _ in 0..batch {
        let sample = problem.draw_sample(worker, rng);
        let g = stochastic_grad(problem, worker, &sample, x, exact);
        acc.axpy(1.0, &g).expect("oracle dimension");
    }
    acc.scale(1.0 / batch as f64);
    acc
}

/// `g + scale · Σ payloads`, summing payloads in the given order.
fn apply_payloads(g: &DenseVector, payloads: &[SparseVector], scale: f64) -> DenseVector {
    let mut acc = DenseVector::zeros(g.dim());
    for q in payloads {
        acc.scatter_add(q).expect("payload dimension");
    }
    let mut out = g.clone();
    out.axpy(scale, &acc).expect("payload dimension");
    out
}

/// One step of `config.algorithm`: returns record `k` (state `x^k`, `g^k` and
/// the coin `c_k`) and advances `state` to `k + 1`.
///
/// On divergence the state is left at `x^k` and the error carries a trace
/// holding only record `k`.
pub fn marina_step<P: Problem + ?Sized>(
    state: &mut MarinaState,
    problem: &P,
    config: &RunConfig,
    streams: &mut Streams,
) -> Result<IterationRecord> {
    let (record, advanced) = step(state, problem, config, streams, None);
    if advanced {
        Ok(record)
    } else {
        Err(Error::Diverged {
            iteration: state.k + 1,
            trace: Box::new(Trace {
                config: config.clone(),
                records: vec![record],
                x_hat: state.x.clone(),
                x_hat_index: state.k,
                best_index: state.k,
                log: None,
            }),
        })
    }
}

fn step<P: Problem + ?Sized>(
    state: &mut MarinaState,
    problem: &P,
    config: &RunConfig,
    streams: &mut Streams,
    log: Option<&mut RunLog>,
) -> (IterationRecord, bool) {
    let n = problem.num_workers();
    let d = problem.dim();
    let m = problem.num_components();

    let coin = match config.algorithm {
        Algorithm::Gd => true,
        _ => streams.coin.bernoulli(config.p),
    };
    let mut x_next = state.x.clone();
    x_next.axpy(-config.gamma, &state.g).expect("estimator dimension");
    let step_sq = x_next.sq_dist(&state.x).expect("iterate dimension");
    let record = state.record(problem, config, Some(coin), Some(step_sq));
    if !x_next.is_finite() || x_next.norm() > DIVERGENCE_NORM {
        return (record, false);
    }
    let (values, grads) = evaluate(problem, &x_next);
    if !mean_value(&values).is_finite() {
        return (record, false);
    }

    let mut minibatch_log: Vec<Vec<usize>> = Vec::new();
    let mut client_log: Vec<usize> = Vec::new();
    let mut uplink = 0u64;
    let oracle: u64;
    let g_next = if coin {
        uplink += (n * d) as u64;
        if config.algorithm == Algorithm::VrMarinaOnline {
            let estimates: Vec<DenseVector> = (0..n)
                .map(|i| batch_estimate(problem, i, &x_next, &grads[i], config.batch, &mut streams.minibatches[i]))
                .collect();
            oracle = (n * config.batch) as u64;
            mean_dense(&estimates)
        } else {
            oracle = (n * m) as u64;
            mean_dense(&grads)
        }
    } else {
        let compressor = &config.compressor;
        match config.algorithm {
            Algorithm::Gd => unreachable!("gradient descent always takes the dense branch"),
            Algorithm::Marina => {
                let mut payloads = Vec::with_capacity(n);
                for i in 0..n {
                    let delta = grads[i].sub(&state.worker_grads[i]).expect("gradient dimension");
                    let q = compressor.compress(&delta, &mut streams.compressors[i]);
                    uplink += q.nnz() as u64;
                    payloads.push(q);
                }
                // workers keep ∇f_i(x^k) from the previous step
                oracle = (n * m) as u64;
                if compressor.is_lossless() {
                    mean_dense(&grads)
                } else {
                    apply_payloads(&state.g, &payloads, 1.0 / n as f64)
                }
            }
            Algorithm::VrMarinaFs => {
                let b = config.minibatch;
                let full = b == m;
                let mut payloads = Vec::with_capacity(n);
                for i in 0..n {
                    let delta = if full {
                        grads[i].sub(&state.worker_grads[i]).expect("gradient dimension")
                    } else {
                        let rng = &mut streams.minibatches[i];
                        let indices: Vec<usize> = (0..b).map(|_| rng.below(m)).collect();
                        let mut acc = DenseVector::zeros(d);
                        for &j in &indices {
                            let diff = problem
                                .component_grad(i, j, &x_next)
                                .sub(&problem.component_grad(i, j, &state.x))
                                .expect("gradient dimension");
                            acc.axpy(1.0, &diff).expect("gradient dimension");
                        }
                        acc.scale(1.0 / b as f64);
                        minibatch_log.push(indices);
                        acc
                    };
                    let q = compressor.compress(&delta, &mut streams.compressors[i]);
                    uplink += q.nnz() as u64;
                    payloads.push(q);
                }
                oracle = (n * 2 * b) as u64;
                if full && compressor.is_lossless() {
                    mean_dense(&grads)
                } else {
                    apply_payloads(&state.g, &payloads, 1.0 / n as f64)
                }
            }
            Algorithm::VrMarinaOnline => {
                let b = config.minibatch;
                let mut payloads = Vec::with_capacity(n);
                for i in 0..n {
                    let rng = &mut streams.minibatches[i];
                    let mut acc = DenseVector::zeros(d);
                    for _ in 0..b {
                        let sample = problem.draw_sample(i, rng);
                        let diff = stochastic_grad(problem, i, &sample, &x_next, &grads[i])
                            .sub(&stochastic_grad(problem, i, &sample, &state.x, &state.worker_grads[i]))
                            .expect("gradient dimension");
                        acc.axpy(1.0, &diff).expect("gradient dimension");
                    }
                    acc.scale(1.0 / b as f64);
                    let q = compressor.compress(&acc, &mut streams.compressors[i]);
                    uplink += q.nnz() as u64;
                    payloads.push(q);
                }
                oracle = (n * 2 * b) as u64;
                apply_payloads(&state.g, &payloads, 1.0 / n as f64)
            }
            Algorithm::PpMarina => {
                let r = config.clients;
                let mut drawn: Vec<usize> = (0..r).map(|_| streams.clients.below(n)).collect();
                drawn.sort_unstable();
                let mut payloads = Vec::with_capacity(r);
                for &i in &drawn {
                    let delta = grads[i].sub(&state.worker_grads[i]).expect("gradient dimension");
                    let q = compressor.compress(&delta, &mut streams.compressors[i]);
                    uplink += q.nnz() as u64;
                    payloads.push(q);
                }
                let mut distinct = drawn.clone();
                distinct.dedup();
                // a sampled worker may not hold ∇f_i(x^k), so it evaluates both points
                oracle = (2 * m * distinct.len()) as u64;
                client_log = drawn;
                apply_payloads(&state.g, &payloads, 1.0 / r as f64)
            }
        }
    };

    state.uplink += uplink;
    state.downlink += (n * (d + 1)) as u64;
    state.oracle += oracle;
    state.x = x_next;
    state.g = g_next;
    state.worker_values = values;
    state.worker_grads = grads;
    state.k += 1;
    if let Some(log) = log {
        log.xs.push(state.x.clone());
        log.gs.push(state.g.clone());
        log.minibatches.push(minibatch_log);
        log.clients.push(client_log);
    }
    (record, true)
}

pub(super) fn execute<P: Problem + ?Sized>(problem: &P, config: &RunConfig) -> Result<Trace> {
    let iterations = config.iterations;
    let mut streams = Streams::new(config.seed, problem.num_workers());
    let x_hat_index = select_output(iterations, &mut streams.output);
    let mut state = MarinaState::init(problem, config, &mut streams)?;
    let mut log = config.log_iterates.then(|| RunLog {
        xs: vec![state.x.clone()],
        gs: vec![state.g.clone()],
        ..RunLog::default()
    });
    let mut records = Vec::with_capacity(iterations + 1);
    let mut x_hat = None;
    for k in 0..iterations {
        if k == x_hat_index {
            x_hat = Some(state.x.clone());
        }
        let (record, advanced) = step(&mut state, problem, config, &mut streams, log.as_mut());
        records.push(record);
        if !advanced {
            log::warn!("run diverged at iteration {}", k + 1);
            let best_index = argmin_grad(&records, records.len());
            let (x_hat, index) = match x_hat {
                Some(x) => (x, x_hat_index),
                None => (state.x.clone(), k),
            };
            return Err(Error::Diverged {
                iteration: k + 1,
                trace: Box::new(Trace {
                    config: config.clone(),
                    records,
                    x_hat,
                    x_hat_index: index,
                    best_index,
                    log,
                }),
            });
        }
    }
    records.push(state.record(problem, config, None, None));
    let best_index = argmin_grad(&records, iterations);
    Ok(Trace {
        config: config.clone(),
        records,
        x_hat: x_hat.expect("output index lies below K"),
        x_hat_index,
        best_index,
        log,
    })
}

/// First index of the smallest `grad_sq_norm` among the first `upto` records.
fn argmin_grad(records: &[IterationRecord], upto: usize) -> usize {
    records[..upto]
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, r)| {
            if r.grad_sq_norm < bv {
                (i, r.grad_sq_norm)
            } else {
                (bi, bv)
            }
        })
        .0
}
