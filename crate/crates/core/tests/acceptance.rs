//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::time::{Duration, Instant};

use marina::algorithms::{gd_run, marina_run, pp_marina_run, run, vr_marina_fs_run, Algorithm, RunConfig, Trace};
use marina::compress::Compressor;
use marina::numcore::{DenseVector, RngStream};
use marina::problems::{
    parse_libsvm, write_libsvm, ClassificationProblem, GaussianNoise, Problem, QuadraticPlProblem, QuadraticSpec,
    SyntheticClassification,
};
use marina::theory::{
    recommended_batch, recommended_p, theoretical_bound, theoretical_stepsize, LyapunovMode, TheoryInputs, Variant,
};
use marina::Error;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

/// Trajectories collected along the way for the descent checks.
#[derive(Default)]
struct Collected {
    /// (label, L, traces) checked pointwise against the one-step descent inequality.
    lemma: Vec<(String, f64, Vec<Trace>)>,
    /// (label, traces) for the seed-averaged Lyapunov descent.
    lyapunov: Vec<(String, Vec<Trace>)>,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn seeded(cfg: &RunConfig, seed: u64) -> RunConfig {
    let mut c = cfg.clone();
    c.seed = seed;
    c
}

fn classification(rows: usize, dim: usize, workers: usize, seed: u64) -> ClassificationProblem {
    let data = SyntheticClassification {
        rows,
        dim,
        flip_prob: 0.1,
        seed,
    }
    .generate()
    .unwrap();
    ClassificationProblem::new(data, workers).unwrap()
}

fn quadratic(mu: f64, l: f64, dim: usize, workers: usize, components: usize, seed: u64) -> QuadraticPlProblem {
    let spec = QuadraticSpec {
        mu,
        l,
        dim,
        workers,
        components,
    };
    QuadraticPlProblem::generate(&spec, &mut RngStream::new(seed, "data-gen")).unwrap()
}

// ---------------------------------------------------------------- criterion 1

/// Ascending K-subsets of 0..d, built independently of the library.
fn subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << d))
        .filter(|mask| mask.count_ones() as usize == k)
        .map(|mask| (0..d).filter(|i| mask >> i & 1 == 1).collect())
        .collect()
}

/// Mean and variance of `Q(x)` from an explicit list of (probability, outcome).
fn moments(x: &[f64], outcomes: &[(f64, Vec<f64>)]) -> (f64, f64) {
    let mut mean = vec![0.0; x.len()];
    let mut var = 0.0;
    for (p, q) in outcomes {
        for i in 0..x.len() {
            mean[i] += p * q[i];
        }
        var += p * q.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    let bias = mean.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    (bias, var)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::new(1, "acceptance/compressors");
    let mut worst_bias: f64 = 0.0;
    let mut worst_var: f64 = 0.0;
    let mut failures = Vec::new();
    for d in 1..=6 {
        for k in 1..=d {
            let c = Compressor::rand_k(k, d).unwrap();
            for _ in 0..20 {
                let x: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
                let scale = d as f64 / k as f64;
                let all = subsets(d, k);
                let prob = 1.0 / all.len() as f64;
                let outcomes: Vec<(f64, Vec<f64>)> = all
                    .iter()
                    .map(|s| {
                        let mut q = vec![0.0; d];
                        for &i in s {
                            q[i] = scale * x[i];
                        }
                        (prob, q)
                    })
                    .collect();
                // the library's enumeration must describe the same distribution
                let lib: Vec<(f64, Vec<f64>)> = c
                    .enumerate_outcomes(&x)
                    .unwrap()
                    .into_iter()
                    .map(|(p, q)| (p, q.to_dense().into_vec()))
                    .collect();
                let mut lib = lib;
                let mut reference = outcomes.clone();
                let key = |o: &(f64, Vec<f64>)| o.1.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
                lib.sort_by_key(key);
                reference.sort_by_key(key);
                if lib.len() != reference.len()
                    || lib.iter().zip(&reference).any(|(a, b)| (a.0 - b.0).abs() > 1e-15 || a.1 != b.1)
                {
                    failures.push(format!("rand_k({k},{d}) enumeration differs"));
                }
                // every sampled output lies in the support
                for _ in 0..5 {
                    let q = c.compress(&x, &mut rng).to_dense().into_vec();
                    if !outcomes.iter().any(|(_, o)| *o == q) {
                        failures.push(format!("rand_k({k},{d}) produced an outcome outside its support"));
                    }
                }
                let (bias, var) = moments(&x, &outcomes);
                let norm2: f64 = x.iter().map(|v| v * v).sum();
                let dev = (var - (scale - 1.0) * norm2).abs();
                worst_bias = worst_bias.max(bias);
                worst_var = worst_var.max(dev);
                if bias > 1e-12 || dev > 1e-12 {
                    failures.push(format!("rand_k({k},{d}): bias {bias:.2e}, variance deviation {dev:.2e}"));
                }
            }
        }
    }
    for d in 1..=10 {
        let c = Compressor::l2_quant(d).unwrap();
        for _ in 0..20 {
            let x: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
            let l2 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let l1: f64 = x.iter().map(|v| v.abs()).sum();
            let outcomes: Vec<(f64, Vec<f64>)> = (0u32..(1 << d))
                .map(|mask| {
                    let mut p = 1.0;
                    let mut q = vec![0.0; d];
                    for i in 0..d {
                        let keep = x[i].abs() / l2;
                        if mask >> i & 1 == 1 {
                            p *= keep;
                            q[i] = l2 * x[i].signum();
                        } else {
                            p *= 1.0 - keep;
                        }
                    }
                    (p, q)
                })
                .collect();
            let (bias, var) = moments(&x, &outcomes);
            let (lib_bias, lib_var) = moments(
                &x,
                &c.enumerate_outcomes(&x)
                    .unwrap()
                    .into_iter()
                    .map(|(p, q)| (p, q.to_dense().into_vec()))
                    .collect::<Vec<_>>(),
            );
            let exact = l2 * l1 - l2 * l2;
            let dev = (var - exact).abs().max((lib_var - exact).abs());
            worst_bias = worst_bias.max(bias).max(lib_bias);
            worst_var = worst_var.max(dev);
            if bias > 1e-12 || lib_bias > 1e-12 || dev > 1e-12 || var > c.omega() * l2 * l2 + 1e-12 {
                failures.push(format!("l2_quant({d}): bias {bias:.2e}, variance deviation {dev:.2e}"));
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(10);
    Outcome::new(
        pass,
        format!(
            "max bias {worst_bias:.1e}, max variance deviation {worst_var:.1e}, {:.2}s{}",
            elapsed.as_secs_f64(),
            failures.first().map(|f| format!("; {f}")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------- criterion 2

fn iterates_equal(a: &Trace, b: &Trace) -> bool {
    let la = a.log.as_ref().unwrap();
    let lb = b.log.as_ref().unwrap();
    la.xs == lb.xs
        && la.gs == lb.gs
        && a.x_hat == b.x_hat
        && a.records.len() == b.records.len()
        && a.records.iter().zip(&b.records).all(|(r, s)| {
            r.f_value.to_bits() == s.f_value.to_bits()
                && r.grad_sq_norm.to_bits() == s.grad_sq_norm.to_bits()
                && r.uplink_floats_cum == s.uplink_floats_cum
                && r.downlink_floats_cum == s.downlink_floats_cum
                && r.oracle_calls_cum == s.oracle_calls_cum
        })
}

fn criterion_2(collected: &mut Collected) -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    let problems: Vec<(&str, Box<dyn Problem>)> = vec![
        ("quadratic", Box::new(quadratic(0.1, 1.0, 8, 4, 1, 21))),
        ("classification", Box::new(classification(200, 8, 4, 22))),
    ];
    for (label, problem) in &problems {
        let d = problem.dim();
        let l = problem.constants().smoothness;
        let x0 = DenseVector::from_vec((0..d).map(|i| 0.5 - 0.1 * i as f64).collect());
        let mut base = RunConfig::new(Algorithm::Gd, 1.0 / l, 1.0, 100, Compressor::identity(d), x0);
        base.log_iterates = true;
        base.clients = 2;
        base.seed = 3;
        let gd = gd_run(problem.as_ref(), &base).unwrap();

        let mut identity = base.clone();
        identity.p = 0.25;
        let t_id = marina_run(problem.as_ref(), &identity).unwrap();
        let mut dense = base.clone();
        dense.compressor = Compressor::rand_k(1, d).unwrap();
        let t_dense = marina_run(problem.as_ref(), &dense).unwrap();
        let t_pp = pp_marina_run(problem.as_ref(), &dense).unwrap();
        let checks = [
            ("marina identity", iterates_equal(&t_id, &gd)),
            ("marina p=1", iterates_equal(&t_dense, &gd) && t_dense.records == gd.records),
            ("pp_marina p=1", iterates_equal(&t_pp, &gd) && t_pp.records == gd.records),
        ];
        for (name, ok) in checks {
            pass &= ok;
            if !ok {
                details.push(format!("{label}: {name} differs"));
            }
        }
        collected
            .lemma
            .push((format!("gd reduction ({label})"), l, vec![gd, t_id, t_dense, t_pp]));
    }
    if pass {
        details.push("bitwise equal over 100 iterations on both problems".into());
    }
    Outcome::new(pass, details.join("; "))
}

// ---------------------------------------------------------------- criterion 3

fn criterion_3(collected: &mut Collected) -> Outcome {
    let problem = classification(40, 6, 1, 31);
    let d = problem.dim();
    let m = problem.num_components();
    let mut cfg = RunConfig::new(Algorithm::VrMarinaFs, 0.5, 0.2, 50, Compressor::identity(d), DenseVector::zeros(d));
    cfg.minibatch = 3;
    cfg.seed = 7;
    cfg.log_iterates = true;
    let trace = vr_marina_fs_run(&problem, &cfg).unwrap();
    let log = trace.log.as_ref().unwrap();
    let full_grad = |x: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; d];
        for j in 0..m {
            for (a, b) in g.iter_mut().zip(problem.component_grad(0, j, x).iter()) {
                *a += b / m as f64;
            }
        }
        g
    };
    let mut worst: f64 = 0.0;
    let mut compressed_steps = 0;
    for k in 0..50 {
        let (x, x_next, g) = (&log.xs[k], &log.xs[k + 1], &log.gs[k]);
        let expected: Vec<f64> = if trace.records[k].coin == Some(true) {
            full_grad(x_next)
        } else {
            compressed_steps += 1;
            let batch = &log.minibatches[k][0];
            let mut delta = vec![0.0; d];
            for &j in batch {
                let a = problem.component_grad(0, j, x_next);
                let b = problem.component_grad(0, j, x);
                for i in 0..d {
                    delta[i] += (a[i] - b[i]) / batch.len() as f64;
                }
            }
            g.iter().zip(&delta).map(|(a, b)| a + b).collect()
        };
        let err = expected
            .iter()
            .zip(log.gs[k + 1].iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(err);
    }
    let l = problem.constants().smoothness;
    collected.lemma.push(("page reduction".into(), l, vec![trace]));
    Outcome::new(
        worst <= 1e-12 && compressed_steps > 0,
        format!("max |g_recomputed - g_logged| = {worst:.1e} over 50 steps ({compressed_steps} minibatch steps)"),
    )
}

// ---------------------------------------------------------------- criterion 4

struct Instance4 {
    problem: ClassificationProblem,
    gamma: f64,
    p: f64,
    delta0: f64,
}

fn instance_4() -> Instance4 {
    let problem = classification(5000, 20, 100, 41);
    let compressor = Compressor::rand_k(1, 20).unwrap();
    let mut inputs = TheoryInputs::from_problem(&problem, &compressor);
    let delta0 = problem.optimality_gap(&vec![0.0; 20]);
    inputs.delta0 = delta0;
    let p = recommended_p(Variant::Marina, &inputs).unwrap();
    let gamma = theoretical_stepsize(Variant::Marina, &inputs, p).unwrap();
    Instance4 {
        problem,
        gamma,
        p,
        delta0,
    }
}

fn criterion_4(inst: &Instance4, collected: &mut Collected) -> Outcome {
    let start = Instant::now();
    let k = 500;
    let d = 20;
    let cfg = RunConfig::new(
        Algorithm::Marina,
        inst.gamma,
        inst.p,
        k,
        Compressor::rand_k(1, d).unwrap(),
        DenseVector::zeros(d),
    );
    let traces: Vec<Trace> = (0..200).map(|s| marina_run(&inst.problem, &seeded(&cfg, s)).unwrap()).collect();
    let avg: Vec<f64> = traces
        .iter()
        .map(|t| t.records[..k].iter().map(|r| r.grad_sq_norm).sum::<f64>() / k as f64)
        .collect();
    let (mean, se) = mean_se(&avg);
    let bound = 2.0 * inst.delta0 / (inst.gamma * k as f64);
    let elapsed = start.elapsed();
    let l = inst.problem.constants().smoothness;
    collected.lemma.push(("nonconvex bound runs".into(), l, Vec::new()));
    collected.lyapunov.push(("nonconvex bound runs".into(), traces));
    Outcome::new(
        mean <= bound * 1.05 && elapsed < Duration::from_secs(300),
        format!(
            "p = {}, gamma = {:.5}, mean avg grad_sq = {mean:.5e} (se {se:.1e}) vs 1.05 x bound {:.5e}, {:.1}s",
            inst.p,
            inst.gamma,
            bound * 1.05,
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- criterion 5

fn criterion_5(collected: &mut Collected) -> Outcome {
    let problem = quadratic(0.1, 1.0, 10, 4, 1, 51);
    let d = 10;
    let mu = problem.constants().pl.unwrap();
    let f_star = problem.constants().lower_bound;
    let x0 = DenseVector::from_vec(vec![1.0; d]);
    let delta0 = problem.optimality_gap(&x0);

    let rand1 = Compressor::rand_k(1, d).unwrap();
    let mut inputs = TheoryInputs::from_problem(&problem, &rand1);
    inputs.delta0 = delta0;
    let p = recommended_p(Variant::MarinaPl, &inputs).unwrap();
    let gamma = theoretical_stepsize(Variant::MarinaPl, &inputs, p).unwrap();
    let cfg = RunConfig::new(Algorithm::Marina, gamma, p, 200, rand1, x0.clone());
    let traces: Vec<Trace> = (0..200).map(|s| marina_run(&problem, &seeded(&cfg, s)).unwrap()).collect();
    let mut pass = true;
    let mut details = Vec::new();
    for k in [50usize, 200] {
        // gap computed from the minimiser, avoiding f(x) - f_* cancellation
        let gaps: Vec<f64> = traces.iter().map(|t| t.records[k].f_value - f_star).collect();
        let (mean, se) = mean_se(&gaps);
        let bound = theoretical_bound(Variant::MarinaPl, &inputs, gamma, p, k);
        let expected = (1.0 - gamma * mu).powi(k as i32) * delta0;
        pass &= (bound - expected).abs() <= 1e-12 * expected && mean <= bound + 3.0 * se;
        details.push(format!("K={k}: mean gap {mean:.4e} vs bound {bound:.4e} + 3se {:.1e}", 3.0 * se));
    }

    // identity compressor: deterministic, per seed, zero slack
    let identity = Compressor::identity(d);
    let mut inputs = TheoryInputs::from_problem(&problem, &identity);
    let p_id = recommended_p(Variant::MarinaPl, &inputs).unwrap();
    let gamma_id = theoretical_stepsize(Variant::MarinaPl, &inputs, p_id).unwrap();
    let mut violations = 0;
    let mut id_traces = Vec::new();
    for seed in 0..200u64 {
        let mut rng = RngStream::new(seed, "acceptance/x0");
        let x0 = DenseVector::from_vec((0..d).map(|_| 2.0 * rng.standard_normal()).collect());
        inputs.delta0 = problem.optimality_gap(&x0);
        let cfg = RunConfig::new(Algorithm::Marina, gamma_id, p_id, 200, identity, x0);
        let t = marina_run(&problem, &seeded(&cfg, seed)).unwrap();
        for k in [50usize, 200] {
            let bound = theoretical_bound(Variant::MarinaPl, &inputs, gamma_id, p_id, k);
            let x = &t.records[k];
            if x.f_value - f_star > bound {
                violations += 1;
            }
        }
        if seed < 20 {
            id_traces.push(t);
        }
    }
    pass &= violations == 0;
    details.push(format!("identity: {violations} per-seed violations (p = {p_id}, gamma = {gamma_id})"));
    let l = problem.constants().smoothness;
    collected.lemma.push(("PL identity runs".into(), l, id_traces));
    collected.lyapunov.push(("PL bound runs".into(), traces));
    collected.lemma.push(("PL bound runs".into(), l, Vec::new()));
    Outcome::new(pass, details.join("; "))
}

// ---------------------------------------------------------------- criterion 6

fn criterion_6(collected: &mut Collected) -> Outcome {
    let base = classification(500, 20, 10, 61);
    let problem = GaussianNoise::with_variance(base, 1.0).unwrap();
    let d = 20;
    let rand1 = Compressor::rand_k(1, d).unwrap();
    let mut inputs = TheoryInputs::from_problem(&problem, &rand1);
    let x0 = DenseVector::zeros(d);
    inputs.delta0 = problem.optimality_gap(&x0);
    inputs.epsilon = 0.2;
    inputs.minibatch = 1;
    inputs.batch = recommended_batch(LyapunovMode::Nonconvex, &inputs).unwrap();
    let p = recommended_p(Variant::VrOnline, &inputs).unwrap();
    let gamma = theoretical_stepsize(Variant::VrOnline, &inputs, p).unwrap();
    let k = 200;
    let mut cfg = RunConfig::new(Algorithm::VrMarinaOnline, gamma, p, k, rand1, x0);
    cfg.batch = inputs.batch;
    cfg.minibatch = 1;
    let traces: Vec<Trace> = (0..200).map(|s| run(&problem, &seeded(&cfg, s)).unwrap()).collect();
    let mins: Vec<f64> = traces
        .iter()
        .map(|t| t.records[..k].iter().map(|r| r.grad_sq_norm).fold(f64::INFINITY, f64::min))
        .collect();
    let avgs: Vec<f64> = traces
        .iter()
        .map(|t| t.records[..k].iter().map(|r| r.grad_sq_norm).sum::<f64>() / k as f64)
        .collect();
    let (mean_min, _) = mean_se(&mins);
    let (mean_avg, _) = mean_se(&avgs);
    let bound = theoretical_bound(Variant::VrOnline, &inputs, gamma, p, k);
    let l = problem.constants().smoothness;
    collected.lemma.push(("online runs".into(), l, traces));
    Outcome::new(
        mean_min <= bound * 1.1,
        format!(
            "b = {}, p = {p}, gamma = {gamma:.5}: mean min grad_sq {mean_min:.4e} (mean avg {mean_avg:.4e}) vs 1.1 x bound {:.4e}",
            inputs.batch,
            bound * 1.1
        ),
    )
}

// ---------------------------------------------------------------- criterion 7

fn criterion_7(collected: &Collected) -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    let mut checked = 0usize;
    let mut worst: f64 = f64::INFINITY;
    for (label, l, traces) in &collected.lemma {
        let traces: Vec<&Trace> = if traces.is_empty() {
            collected
                .lyapunov
                .iter()
                .filter(|(name, _)| name == label)
                .flat_map(|(_, t)| t.iter())
                .collect()
        } else {
            traces.iter().collect()
        };
        for t in traces {
            let gamma = t.config.gamma;
            for w in t.records.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                let step = a.step_sq_norm.unwrap();
                let rhs = a.f_value - gamma / 2.0 * a.grad_sq_norm - (1.0 / (2.0 * gamma) - l / 2.0) * step
                    + gamma / 2.0 * a.est_err_sq;
                let slack = rhs + 1e-9 - b.f_value;
                worst = worst.min(rhs - b.f_value);
                checked += 1;
                if slack < 0.0 {
                    pass = false;
                    details.push(format!("{label}: descent inequality violated by {:.2e}", -slack));
                }
            }
        }
    }
    details.truncate(3);
    details.insert(0, format!("descent inequality on {checked} steps, min slack {worst:.2e}"));

    for (label, traces) in &collected.lyapunov {
        let k = traces[0].records.len() - 1;
        let mut violations = 0;
        let mut worst_z = f64::NEG_INFINITY;
        for step in 0..k {
            let diffs: Vec<f64> = traces
                .iter()
                .map(|t| t.records[step + 1].lyapunov - t.records[step].lyapunov)
                .collect();
            let (mean, se) = mean_se(&diffs);
            if mean > 3.0 * se {
                violations += 1;
            }
            if se > 0.0 {
                worst_z = worst_z.max(mean / se);
            }
        }
        pass &= violations == 0;
        details.push(format!(
            "{label}: Phi descent over {} seeds x {k} steps, {violations} violations, max mean/se {worst_z:.2}",
            traces.len()
        ));
    }
    Outcome::new(pass, details.join("; "))
}

// ---------------------------------------------------------------- criterion 8

fn criterion_8() -> Outcome {
    let problem = quadratic(0.1, 1.0, 20, 10, 1, 81);
    let (d, n, k_rand, p, iters) = (20usize, 10usize, 3usize, 0.2, 200usize);
    let compressor = Compressor::rand_k(k_rand, d).unwrap();
    let gamma = 0.2;
    let cfg = RunConfig::new(Algorithm::Marina, gamma, p, iters, compressor, DenseVector::from_vec(vec![1.0; d]));
    let mut per_seed = Vec::new();
    let mut exact = true;
    for seed in 0..100 {
        let t = marina_run(&problem, &seeded(&cfg, seed)).unwrap();
        for w in t.records.windows(2) {
            let up = w[1].uplink_floats_cum - w[0].uplink_floats_cum;
            let expected = if w[0].coin == Some(true) { n * d } else { n * k_rand };
            exact &= up == expected as u64;
            exact &= w[1].downlink_floats_cum - w[0].downlink_floats_cum == (n * (d + 1)) as u64;
        }
        let total = t.last().uplink_floats_cum - t.records[0].uplink_floats_cum;
        per_seed.push(total as f64 / (n * iters) as f64);
    }
    let (mean, se) = mean_se(&per_seed);
    let expected = p * d as f64 + (1.0 - p) * k_rand as f64;
    let within = (mean - expected).abs() <= 4.0 * se;

    // partial participation: exactly r payloads on compressed steps
    let r = 4;
    let mut pp_cfg = cfg.clone();
    pp_cfg.algorithm = Algorithm::PpMarina;
    pp_cfg.clients = r;
    pp_cfg.log_iterates = true;
    let mut pp_exact = true;
    let mut compressed = 0;
    for seed in 0..20 {
        let t = run(&problem, &seeded(&pp_cfg, seed)).unwrap();
        let log = t.log.as_ref().unwrap();
        for (k, w) in t.records.windows(2).enumerate() {
            let up = w[1].uplink_floats_cum - w[0].uplink_floats_cum;
            if w[0].coin == Some(false) {
                compressed += 1;
                pp_exact &= log.clients[k].len() == r && up == (r * k_rand) as u64;
            } else {
                pp_exact &= up == (n * d) as u64;
            }
        }
    }

    // finite-sum oracle accounting
    let fs_problem = quadratic(0.1, 1.0, 5, 3, 8, 82);
    let mut fs = RunConfig::new(Algorithm::VrMarinaFs, 0.2, 0.3, 100, Compressor::rand_k(2, 5).unwrap(), DenseVector::zeros(5));
    fs.minibatch = 2;
    let t = vr_marina_fs_run(&fs_problem, &fs).unwrap();
    let oracle_exact = t.records.windows(2).all(|w| {
        let calls = w[1].oracle_calls_cum - w[0].oracle_calls_cum;
        calls == if w[0].coin == Some(true) { 3 * 8 } else { 3 * 2 * 2 }
    });

    Outcome::new(
        within && exact && pp_exact && oracle_exact && compressed > 0,
        format!(
            "uplink/worker/iter {mean:.4} vs {expected:.4} (4se = {:.4}); per-step exact: {exact}; pp exact on {compressed} compressed steps: {pp_exact}; oracle exact: {oracle_exact}",
            4.0 * se
        ),
    )
}

// ---------------------------------------------------------------- criterion 9

fn first_reach(t: &Trace, target: f64) -> Option<u64> {
    t.records.iter().find(|r| r.grad_sq_norm <= target).map(|r| r.uplink_floats_cum)
}

fn criterion_9(inst: &Instance4) -> Outcome {
    let d = 20;
    let l = inst.problem.constants().smoothness;
    let x0 = DenseVector::zeros(d);
    let gd = gd_run(&inst.problem, &RunConfig::new(Algorithm::Gd, 1.0 / l, 1.0, 500, Compressor::identity(d), x0.clone())).unwrap();
    let floor = gd.last().grad_sq_norm;
    let target = 10.0 * floor;

    // identity compressor: recommended p = 1 and the stepsize is 1/L
    let identity = Compressor::identity(d);
    let inputs = TheoryInputs::from_problem(&inst.problem, &identity);
    let p_id = recommended_p(Variant::Marina, &inputs).unwrap();
    let gamma_id = theoretical_stepsize(Variant::Marina, &inputs, p_id).unwrap();
    let id_cfg = RunConfig::new(Algorithm::Marina, gamma_id, p_id, 500, identity, x0.clone());
    let rand_cfg = RunConfig::new(Algorithm::Marina, inst.gamma, inst.p, 4000, Compressor::rand_k(1, d).unwrap(), x0);
    let mut id_floats = Vec::new();
    let mut rand_floats = Vec::new();
    for seed in 0..10 {
        let a = marina_run(&inst.problem, &seeded(&id_cfg, seed)).unwrap();
        let b = marina_run(&inst.problem, &seeded(&rand_cfg, seed)).unwrap();
        match (first_reach(&a, target), first_reach(&b, target)) {
            (Some(x), Some(y)) => {
                id_floats.push(x as f64);
                rand_floats.push(y as f64);
            }
            _ => {
                return Outcome::new(false, format!("seed {seed}: a method did not reach grad_sq <= {target:.3e}"));
            }
        }
    }
    let id_mean = id_floats.iter().sum::<f64>() / 10.0;
    let rand_mean = rand_floats.iter().sum::<f64>() / 10.0;
    let ratio = id_mean / rand_mean;
    Outcome::new(
        ratio >= 2.0,
        format!("target {target:.3e}: identity {id_mean:.0} floats, rand_1 {rand_mean:.0} floats, ratio {ratio:.2}"),
    )
}

// ---------------------------------------------------------------- criterion 10

const CONFIG: &str = r#"
seeds = [0, 1, 2]

[problem]
kind = "libsvm"
path = "data.libsvm"
workers = 2

[algorithm]
name = "vr_marina_fs"
iterations = 40
minibatch = 2

[compressor]
kind = "l2_quant"

[output]
dir = "out"
formats = ["csv", "jsonl"]
"#;

fn read_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn criterion_10() -> Outcome {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let text = std::fs::read_to_string(fixtures.join("small.libsvm")).unwrap();
    let data = parse_libsvm(text.as_bytes(), None).unwrap();
    let expected_rows: [(f64, &[(usize, f64)]); 5] = [
        (1.0, &[(0, 0.5), (2, -2.0), (6, 1.25)]),
        (-1.0, &[(1, 1.0)]),
        (1.0, &[]),
        (-1.0, &[(0, 0.1), (1, 0.2), (2, 0.3), (3, 0.4), (4, 0.5), (5, 0.6), (6, 0.7)]),
        (1.0, &[(3, 1e-3), (5, -3.5)]),
    ];
    let mut parse_ok = data.len() == 5 && data.dim() == 7;
    for (row, (label, feats)) in data.rows().iter().zip(expected_rows) {
        let got: Vec<(usize, f64)> = row.features.iter().collect();
        parse_ok &= row.label == label && got == feats;
    }
    let written = write_libsvm(&data);
    let again = parse_libsvm(written.as_bytes(), None).unwrap();
    let round_trip = again == data && write_libsvm(&again) == written;
    let malformed = std::fs::read_to_string(fixtures.join("malformed.libsvm")).unwrap();
    let rejected = matches!(parse_libsvm(malformed.as_bytes(), None), Err(Error::Parse { line: 3, .. }));

    // repeated runs of the same config write byte-identical files
    let dir = tempfile::tempdir().unwrap();
    let body: String = (0..40)
        .map(|i| {
            let label = if i % 3 == 0 { "-1" } else { "+1" };
            format!("{label} {}:{} {}:{}\n", i % 4 + 1, 0.1 * i as f64, i % 3 + 5, (i as f64).sin())
        })
        .collect();
    std::fs::write(dir.path().join("data.libsvm"), body).unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(&config, CONFIG).unwrap();
    marina::cli::run_experiment(&config).unwrap();
    let first = read_outputs(&dir.path().join("out"));
    marina::cli::run_experiment(&config).unwrap();
    let second = read_outputs(&dir.path().join("out"));
    let identical = first == second && first.len() == 7;
    let seeds_differ = first[0].1 != first[2].1;

    Outcome::new(
        parse_ok && round_trip && rejected && identical && seeds_differ,
        format!(
            "fixture parsed: {parse_ok}, round trip: {round_trip}, malformed rejected at line 3: {rejected}, {} output files byte-identical: {identical}",
            first.len()
        ),
    )
}

fn main() {
    let mut collected = Collected::default();
    let inst = instance_4();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("1 compressor contract", criterion_1()));
    results.push(("2 GD reduction", criterion_2(&mut collected)));
    results.push(("3 PAGE reduction", criterion_3(&mut collected)));
    results.push(("4 nonconvex bound", criterion_4(&inst, &mut collected)));
    results.push(("5 PL bound", criterion_5(&mut collected)));
    results.push(("6 online bound", criterion_6(&mut collected)));
    results.push(("7 Lyapunov and one-step descent", criterion_7(&collected)));
    results.push(("8 communication accounting", criterion_8()));
    results.push(("9 communication savings", criterion_9(&inst)));
    results.push(("10 determinism and parser", criterion_10()));

    let mut failed = 0;
    for (name, outcome) in &results {
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("[PRIMARY] criterion {name}: {tag} ({})", outcome.detail);
        if !outcome.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
