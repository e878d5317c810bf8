//! Self-checks runnable from the command line.

use std::fmt;

use rayon::prelude::*;

use crate::algorithms::{gd_run, marina_run, pp_marina_run, run, vr_marina_fs_run, Algorithm, RunConfig, Trace};
use crate::compress::Compressor;
use crate::error::{Error, Result};
use crate::numcore::{rng, DenseVector, RngStream};
use crate::problems::{
    ClassificationProblem, GaussianNoise, Problem, QuadraticPlProblem, QuadraticSpec, SyntheticClassification,
};
use crate::theory::{theoretical_bound, theoretical_stepsize, recommended_batch, LyapunovMode, TheoryInputs, Variant};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Compressors,
    Identities,
    Bounds,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "compressors" => Ok(Suite::Compressors),
            "identities" => Ok(Suite::Identities),
            "bounds" => Ok(Suite::Bounds),
            other => Err(Error::usage(format!(
                "unknown suite {other:?} (expected compressors, identities or bounds)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::NotApplicable => "not applicable (γ exceeds theory)",
        };
        write!(f, "{}: {} ({})", self.name, tag, self.detail)
    }
}

/// Runs a suite. `gamma_scale` multiplies the theoretical stepsize in the
/// bounds suite; above 1 the bound checks are reported as not applicable.
pub fn verify(suite: Suite, gamma_scale: f64) -> Result<Vec<Check>> {
    match suite {
        Suite::Compressors => compressors(),
        Suite::Identities => identities(),
        Suite::Bounds => bounds(gamma_scale),
    }
}

fn random_vector(rng: &mut RngStream, d: usize) -> Vec<f64> {
    (0..d).map(|_| 2.0 * rng.standard_normal()).collect()
}

/// Largest `E‖Q(x) − x‖²/‖x‖²` and `‖E Q(x) − x‖` over the given points.
fn enumerated(c: &Compressor, points: &[Vec<f64>]) -> Result<(f64, f64)> {
    let mut worst_ratio: f64 = 0.0;
    let mut worst_bias: f64 = 0.0;
    for x in points {
        let outcomes = c.enumerate_outcomes(x)?;
        let mut mean = vec![0.0; x.len()];
        let mut var = 0.0;
        for (p, q) in &outcomes {
            let dense = q.to_dense();
            for (m, v) in mean.iter_mut().zip(dense.iter()) {
                *m += p * v;
            }
            var += p * dense.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        let bias = mean.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        worst_bias = worst_bias.max(bias);
        if norm2 > 0.0 {
            worst_ratio = worst_ratio.max(var / norm2);
        }
    }
    Ok((worst_ratio, worst_bias))
}

fn compressors() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut rng = RngStream::new(0, "verify");
    for d in 1..=6 {
        let points: Vec<Vec<f64>> = (0..20).map(|_| random_vector(&mut rng, d)).collect();
        for k in 1..=d {
            let c = Compressor::rand_k(k, d)?;
            let (omega, bias) = enumerated(&c, &points)?;
            let ok = bias <= 1e-12 && (omega - c.omega()).abs() <= 1e-12;
            checks.push(Check::new(
                format!("rand_k({k},{d}) enumeration"),
                ok,
                format!("omega measured = {omega:.12}, declared = {}, bias = {bias:.1e}", c.omega()),
            ));
        }
    }
    for d in [2, 4, 8] {
        let points: Vec<Vec<f64>> = (0..20).map(|_| random_vector(&mut rng, d)).collect();
        let c = Compressor::l2_quant(d)?;
        let (omega, bias) = enumerated(&c, &points)?;
        let ok = bias <= 1e-12 && omega <= c.omega() + 1e-12;
        checks.push(Check::new(
            format!("l2_quant({d}) enumeration"),
            ok,
            format!("omega measured = {omega:.6} <= bound {:.6}, bias = {bias:.1e}", c.omega()),
        ));
    }
    // Monte Carlo: unbiasedness per coordinate within 5 standard errors and mean density
    let draws = 20_000;
    for c in [Compressor::rand_k(2, 4)?, Compressor::l2_quant(4)?] {
        let x = [1.0, -0.5, 2.0, 0.25];
        let mut stream = RngStream::new(1, &rng::compressor_label(0));
        let mut sum = [0.0; 4];
        let mut sum_sq = [0.0; 4];
        let mut nnz = 0.0;
        for _ in 0..draws {
            let q = c.compress(&x, &mut stream);
            nnz += q.nnz() as f64;
            for (i, v) in q.iter() {
                sum[i] += v;
                sum_sq[i] += v * v;
            }
        }
        let n = draws as f64;
        let mut worst = 0.0f64;
        for i in 0..4 {
            let mean = sum[i] / n;
            let se = ((sum_sq[i] / n - mean * mean) / n).sqrt().max(1e-300);
            worst = worst.max((mean - x[i]).abs() / se);
        }
        let density = nnz / n;
        checks.push(Check::new(
            format!("{:?} Monte Carlo", c.kind()),
            worst <= 5.0 && density <= c.zeta() * 1.05,
            format!("max |bias|/se = {worst:.2}, mean density = {density:.3} (zeta = {:.3})", c.zeta()),
        ));
    }
    Ok(checks)
}

fn small_quadratic() -> Result<QuadraticPlProblem> {
    let spec = QuadraticSpec {
        mu: 0.2,
        l: 1.0,
        dim: 5,
        workers: 3,
        components: 4,
    };
    QuadraticPlProblem::generate(&spec, &mut RngStream::new(11, rng::DATA_GEN))
}

fn small_classification() -> Result<ClassificationProblem> {
    let data = SyntheticClassification {
        rows: 60,
        dim: 5,
        flip_prob: 0.1,
        seed: 12,
    }
    .generate()?;
    ClassificationProblem::new(data, 3)
}

/// Iterate-level equality: f, gradient norms, estimator error, step lengths
/// and the output point. Coins and accounting are compared separately.
pub fn same_iterates(a: &Trace, b: &Trace) -> bool {
    a.records.len() == b.records.len()
        && a.x_hat == b.x_hat
        && a.records.iter().zip(&b.records).all(|(r, s)| {
            r.f_value.to_bits() == s.f_value.to_bits()
                && r.grad_sq_norm.to_bits() == s.grad_sq_norm.to_bits()
                && r.est_err_sq.to_bits() == s.est_err_sq.to_bits()
                && r.step_sq_norm.map(f64::to_bits) == s.step_sq_norm.map(f64::to_bits)
        })
}

fn identity_checks<P: Problem>(label: &str, problem: &P, checks: &mut Vec<Check>) -> Result<()> {
    let d = problem.dim();
    let gamma = 1.0 / problem.constants().smoothness;
    let x0 = DenseVector::from_vec((0..d).map(|i| 1.0 - 0.3 * i as f64).collect());
    let mut cfg = RunConfig::new(Algorithm::Gd, gamma, 1.0, 100, Compressor::identity(d), x0);
    cfg.seed = 5;
    cfg.clients = problem.num_workers().min(2);
    let gd = gd_run(problem, &cfg)?;

    let mut identity = cfg.clone();
    identity.p = 0.3;
    let t = marina_run(problem, &identity)?;
    checks.push(Check::new(
        format!("{label}: marina(identity, p=0.3) == gd"),
        same_iterates(&t, &gd),
        "bitwise",
    ));
    let mut dense = cfg.clone();
    dense.compressor = Compressor::rand_k(1, d)?;
    let t = marina_run(problem, &dense)?;
    checks.push(Check::new(
        format!("{label}: marina(p=1) == gd"),
        same_iterates(&t, &gd) && t.records == gd.records,
        "bitwise, including accounting",
    ));
    let t = pp_marina_run(problem, &dense)?;
    checks.push(Check::new(
        format!("{label}: pp_marina(p=1) == gd"),
        same_iterates(&t, &gd) && t.records == gd.records,
        "bitwise, including accounting",
    ));

    let mut full = dense.clone();
    full.p = 0.3;
    full.minibatch = problem.num_components();
    let a = marina_run(problem, &full)?;
    let b = vr_marina_fs_run(problem, &full)?;
    checks.push(Check::new(
        format!("{label}: vr_marina_fs(b'=m) == marina"),
        same_iterates(&a, &b),
        "bitwise iterates, rand_k(1)",
    ));
    Ok(())
}

fn identities() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    identity_checks("quadratic", &small_quadratic()?, &mut checks)?;
    identity_checks("classification", &small_classification()?, &mut checks)?;
    Ok(checks)
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

fn run_many<P: Problem>(problem: &P, cfg: &RunConfig, seeds: u64) -> Result<Vec<Trace>> {
    (0..seeds)
        .into_par_iter()
        .map(|s| {
            let mut c = cfg.clone();
            c.seed = s;
            run(problem, &c)
        })
        .collect()
}

fn bounds(gamma_scale: f64) -> Result<Vec<Check>> {
    let seeds = 50;
    let applicable = gamma_scale <= 1.0;
    let mut checks = Vec::new();
    let mut push = |name: &str, ok: bool, detail: String| {
        let mut c = Check::new(name, ok, detail);
        if !applicable {
            c.status = Status::NotApplicable;
        }
        checks.push(c);
    };

    // nonconvex MARINA on classification
    let problem = small_classification()?;
    let d = problem.dim();
    let compressor = Compressor::rand_k(1, d)?;
    let mut inputs = TheoryInputs::from_problem(&problem, &compressor);
    let x0 = DenseVector::zeros(d);
    inputs.delta0 = problem.optimality_gap(&x0);
    let p = compressor.zeta() / d as f64;
    let gamma = theoretical_stepsize(Variant::Marina, &inputs, p)? * gamma_scale;
    let k = 100;
    let cfg = RunConfig::new(Algorithm::Marina, gamma, p, k, compressor, x0.clone());
    let bound = theoretical_bound(Variant::Marina, &inputs, gamma, p, k);
    let avg: Vec<f64> = run_many(&problem, &cfg, seeds)?
        .iter()
        .map(|t| t.records[..k].iter().map(|r| r.grad_sq_norm).sum::<f64>() / k as f64)
        .collect();
    let (mean, _) = mean_se(&avg);
    push("marina nonconvex bound", mean <= bound * 1.05, format!("mean {mean:.4e} vs bound {bound:.4e}"));

    // PL MARINA on a quadratic
    let problem = small_quadratic()?;
    let d = problem.dim();
    let compressor = Compressor::rand_k(1, d)?;
    let mut inputs = TheoryInputs::from_problem(&problem, &compressor);
    let x0 = DenseVector::from_vec(vec![1.0; d]);
    inputs.delta0 = problem.optimality_gap(&x0);
    let p = compressor.zeta() / d as f64;
    let gamma = theoretical_stepsize(Variant::MarinaPl, &inputs, p)? * gamma_scale;
    let k = 100;
    let cfg = RunConfig::new(Algorithm::Marina, gamma, p, k, compressor, x0);
    let bound = theoretical_bound(Variant::MarinaPl, &inputs, gamma, p, k);
    let gaps: Vec<f64> = run_many(&problem, &cfg, seeds)?
        .iter()
        .map(|t| t.last().f_value - problem.constants().lower_bound)
        .collect();
    let (mean, se) = mean_se(&gaps);
    push(
        "marina PL bound",
        mean <= bound + 3.0 * se,
        format!("mean gap {mean:.4e} vs bound {bound:.4e} (+3 se {se:.1e})"),
    );

    // online VR-MARINA with additive noise
    let problem = GaussianNoise::with_variance(small_classification()?, 1.0)?;
    let d = problem.dim();
    let compressor = Compressor::rand_k(1, d)?;
    let mut inputs = TheoryInputs::from_problem(&problem, &compressor);
    let x0 = DenseVector::zeros(d);
    inputs.delta0 = problem.optimality_gap(&x0);
    inputs.epsilon = 0.3;
    inputs.batch = recommended_batch(LyapunovMode::Nonconvex, &inputs)?;
    let p = crate::theory::recommended_p(Variant::VrOnline, &inputs)?;
    let gamma = theoretical_stepsize(Variant::VrOnline, &inputs, p)? * gamma_scale;
    let k = 100;
    let mut cfg = RunConfig::new(Algorithm::VrMarinaOnline, gamma, p, k, compressor, x0);
    cfg.batch = inputs.batch;
    let bound = theoretical_bound(Variant::VrOnline, &inputs, gamma, p, k);
    let avg: Vec<f64> = run_many(&problem, &cfg, seeds)?
        .iter()
        .map(|t| t.records[..k].iter().map(|r| r.grad_sq_norm).sum::<f64>() / k as f64)
        .collect();
    let (mean, _) = mean_se(&avg);
    push("vr_marina online bound", mean <= bound * 1.1, format!("mean {mean:.4e} vs bound {bound:.4e}"));
    Ok(checks)
}
