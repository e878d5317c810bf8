//! Experiment configuration files.
//!
//! Configs are TOML. Unknown keys are rejected, and validation messages name
//! the offending key as `section.key`. See the README for the full grammar.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::{Algorithm, RunConfig};
use crate::compress::{Compressor, CompressorKind};
use crate::error::{Error, Result};
use crate::numcore::{rng, DenseVector, RngStream};
use crate::problems::{
    parse_libsvm_file, ClassificationProblem, GaussianNoise, Problem, QuadraticPlProblem, QuadraticSpec,
    SyntheticClassification,
};
use crate::theory::{
    recommended_batch, recommended_p, theoretical_bound, theoretical_stepsize, LyapunovMode, TheoryInputs, Variant,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    pub problem: ProblemConfig,
    pub algorithm: AlgorithmConfig,
    #[serde(default)]
    pub compressor: CompressorConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// `libsvm`, `synthetic_classification` or `quadratic_pl`.
    pub kind: String,
    /// `n`.
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flip_prob: Option<f64>,
    #[serde(default)]
    pub data_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<usize>,
    /// Total variance `σ_i²` of an additive Gaussian oracle noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_variance: Option<f64>,
}

/// A number or the literal `"auto"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoOr<T> {
    Value(T),
    Keyword(String),
}

impl<T> AutoOr<T> {
    fn auto() -> Self {
        AutoOr::Keyword("auto".into())
    }

    /// `Some(value)`, or `None` for `"auto"`.
    fn value(&self, key: &str) -> Result<Option<&T>> {
        match self {
            AutoOr::Value(v) => Ok(Some(v)),
            AutoOr::Keyword(s) if s == "auto" => Ok(None),
            AutoOr::Keyword(s) => Err(Error::Config(format!("{key}: expected a number or \"auto\", got {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    #[default]
    Nonconvex,
    Pl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub name: Algorithm,
    pub iterations: usize,
    #[serde(default = "AutoOr::auto")]
    pub gamma: AutoOr<f64>,
    /// Multiplies an automatically chosen stepsize.
    #[serde(default = "one")]
    pub gamma_scale: f64,
    #[serde(default = "AutoOr::auto")]
    pub p: AutoOr<f64>,
    #[serde(default = "batch_default")]
    pub batch: AutoOr<usize>,
    #[serde(default = "one_usize")]
    pub minibatch: usize,
    /// Defaults to all workers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clients: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub regime: Regime,
    /// Defaults to the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "bits_default")]
    pub bits_per_float: u32,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn batch_default() -> AutoOr<usize> {
    AutoOr::Value(1)
}

fn bits_default() -> u32 {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompressorConfig {
    /// `identity`, `rand_k` or `l2_quant`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

impl Default for CompressorConfig {
    fn default() -> Self {
        CompressorConfig {
            kind: "identity".into(),
            k: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "dir_default")]
    pub dir: PathBuf,
    #[serde(default = "formats_default")]
    pub formats: Vec<String>,
    #[serde(default = "true_default")]
    pub record_lyapunov: bool,
}

fn dir_default() -> PathBuf {
    PathBuf::from("out")
}

fn formats_default() -> Vec<String> {
    vec!["csv".into()]
}

fn true_default() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: dir_default(),
            formats: formats_default(),
            record_lyapunov: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub values: Vec<f64>,
    /// Target accuracy `ε`; floats-to-target uses `‖∇f‖² ≤ ε²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config; a relative `problem.path` and `output.dir` are
    /// resolved against the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(p) = &config.problem.path {
            if p.is_relative() {
                config.problem.path = Some(base.join(p));
            }
        }
        if config.output.dir.is_relative() {
            config.output.dir = base.join(&config.output.dir);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::Config(format!("{key}: {msg}")));
        if self.seeds.is_empty() {
            return bad("seeds", "at least one seed is required".into());
        }
        if self.problem.workers == 0 {
            return bad("problem.workers", "must be at least 1".into());
        }
        let a = &self.algorithm;
        if a.iterations == 0 {
            return bad("algorithm.iterations", "must be at least 1".into());
        }
        if let Some(&p) = a.p.value("algorithm.p")? {
            if !(p > 0.0 && p <= 1.0) {
                return bad("algorithm.p", format!("must lie in (0, 1], got {p}"));
            }
        }
        if let Some(&g) = a.gamma.value("algorithm.gamma")? {
            if !(g >= 0.0) || !g.is_finite() {
                return bad("algorithm.gamma", format!("must be finite and >= 0, got {g}"));
            }
        }
        if !(a.gamma_scale > 0.0) || !a.gamma_scale.is_finite() {
            return bad("algorithm.gamma_scale", format!("must be positive, got {}", a.gamma_scale));
        }
        if let Some(&b) = a.batch.value("algorithm.batch")? {
            if b == 0 {
                return bad("algorithm.batch", "must be at least 1".into());
            }
        } else if a.epsilon.is_none() {
            return bad("algorithm.epsilon", "required when algorithm.batch = \"auto\"".into());
        }
        if a.minibatch == 0 {
            return bad("algorithm.minibatch", "must be at least 1".into());
        }
        if a.clients == Some(0) {
            return bad("algorithm.clients", "must be at least 1".into());
        }
        if let Some(eps) = a.epsilon {
            if !(eps > 0.0) {
                return bad("algorithm.epsilon", format!("must be positive, got {eps}"));
            }
        }
        if a.bits_per_float == 0 {
            return bad("algorithm.bits_per_float", "must be positive".into());
        }
        for f in &self.output.formats {
            if f != "csv" && f != "jsonl" {
                return bad("output.formats", format!("unknown format {f:?} (expected csv or jsonl)"));
            }
        }
        match self.compressor.kind.as_str() {
            "identity" | "l2_quant" => {}
            "rand_k" => {
                if self.compressor.k.is_none() {
                    return bad("compressor.k", "required for rand_k".into());
                }
            }
            other => return bad("compressor.kind", format!("unknown compressor {other:?}")),
        }
        match self.problem.kind.as_str() {
            "libsvm" | "synthetic_classification" | "quadratic_pl" => {}
            other => return bad("problem.kind", format!("unknown problem kind {other:?}")),
        }
        if let Some(v) = self.problem.noise_variance {
            if !(v >= 0.0) || !v.is_finite() {
                return bad("problem.noise_variance", format!("must be finite and >= 0, got {v}"));
            }
        }
        Ok(())
    }

    pub fn build_problem(&self) -> Result<Box<dyn Problem>> {
        let pc = &self.problem;
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| Error::Config(format!("problem.{key}: required for {}", pc.kind)));
        let need_n = |v: Option<usize>, key: &str| {
            v.ok_or_else(|| Error::Config(format!("problem.{key}: required for {}", pc.kind)))
        };
        let keyed = |key: &str, e: Error| match e {
            Error::Usage(msg) => Error::Config(format!("problem.{key}: {msg}")),
            other => other,
        };
        let base: Box<dyn Problem> = match pc.kind.as_str() {
            "libsvm" => {
                let path = pc
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("problem.path: required for libsvm".into()))?;
                let data = parse_libsvm_file(path, pc.dim).map_err(|e| keyed("path", e))?;
                Box::new(ClassificationProblem::new(data, pc.workers).map_err(|e| keyed("workers", e))?)
            }
            "synthetic_classification" => {
                let data = SyntheticClassification {
                    rows: need_n(pc.rows, "rows")?,
                    dim: need_n(pc.dim, "dim")?,
                    flip_prob: pc.flip_prob.unwrap_or(0.0),
                    seed: pc.data_seed,
                }
                .generate()
                .map_err(|e| keyed("dim", e))?;
                Box::new(ClassificationProblem::new(data, pc.workers).map_err(|e| keyed("workers", e))?)
            }
            "quadratic_pl" => {
                let spec = QuadraticSpec {
                    mu: need(pc.mu, "mu")?,
                    l: need(pc.l, "l")?,
                    dim: need_n(pc.dim, "dim")?,
                    workers: pc.workers,
                    components: pc.components.unwrap_or(1),
                };
                let mut rng = RngStream::new(pc.data_seed, rng::DATA_GEN);
                Box::new(QuadraticPlProblem::generate(&spec, &mut rng).map_err(|e| keyed("mu", e))?)
            }
            other => return Err(Error::Config(format!("problem.kind: unknown problem kind {other:?}"))),
        };
        match pc.noise_variance {
            Some(v) => Ok(Box::new(GaussianNoise::with_variance(base, v)?)),
            None => Ok(base),
        }
    }

    pub fn build_compressor(&self, dim: usize) -> Result<Compressor> {
        let kind = match self.compressor.kind.as_str() {
            "identity" => CompressorKind::Identity,
            "l2_quant" => CompressorKind::L2Quant,
            "rand_k" => CompressorKind::RandK {
                k: self.compressor.k.unwrap_or(0),
            },
            other => return Err(Error::Config(format!("compressor.kind: unknown compressor {other:?}"))),
        };
        Compressor::new(kind, dim).map_err(|e| match e {
            Error::Usage(msg) => Error::Config(format!("compressor.k: {msg}")),
            other => other,
        })
    }
}

/// Method parameters after `"auto"` resolution, with the matching theory values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Plan {
    pub algorithm: Algorithm,
    pub variant: Variant,
    pub gamma: f64,
    pub gamma_auto: bool,
    pub p: f64,
    pub p_auto: bool,
    pub batch: usize,
    pub batch_auto: bool,
    pub minibatch: usize,
    pub clients: usize,
    pub iterations: usize,
    pub omega: f64,
    pub zeta: f64,
    /// Theoretical maximum stepsize for `p`.
    pub gamma_max: f64,
    pub gamma_within_theory: bool,
    /// Right-hand side of the matching expectation bound.
    pub bound: f64,
    pub inputs: TheoryInputs,
}

/// A config with its problem built and every `"auto"` resolved.
pub struct Resolved {
    pub config: ExperimentConfig,
    pub problem: Box<dyn Problem>,
    pub plan: Plan,
    pub template: RunConfig,
}

impl Resolved {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let problem = config.build_problem()?;
        let d = problem.dim();
        let n = problem.num_workers();
        let compressor = config.build_compressor(d)?;
        let a = &config.algorithm;

        let x0 = match &a.x0 {
            Some(v) if v.len() != d => {
                return Err(Error::Config(format!("algorithm.x0: has {} entries, problem dimension is {d}", v.len())))
            }
            Some(v) => DenseVector::from_vec(v.clone()),
            None => DenseVector::zeros(d),
        };
        let clients = a.clients.unwrap_or(n);
        if a.name == Algorithm::PpMarina && clients > n {
            return Err(Error::Config(format!("algorithm.clients: {clients} exceeds the {n} workers")));
        }

        let pl = a.regime == Regime::Pl;
        let mode = if pl { LyapunovMode::Pl } else { LyapunovMode::Nonconvex };
        let variant = match a.name {
            Algorithm::Gd | Algorithm::Marina => Variant::Marina,
            Algorithm::VrMarinaFs => Variant::VrFs,
            Algorithm::VrMarinaOnline => Variant::VrOnline,
            Algorithm::PpMarina => Variant::Pp,
        }
        .with_pl(pl);

        let mut inputs = TheoryInputs::from_problem(problem.as_ref(), &compressor);
        if a.name == Algorithm::Gd {
            inputs.omega = 0.0;
            inputs.zeta = d as f64;
        }
        inputs.minibatch = a.minibatch;
        inputs.clients = clients;
        inputs.epsilon = a.epsilon.unwrap_or(0.0);
        inputs.delta0 = problem.optimality_gap(&x0);
        let keyed = |key: &str, e: Error| match e {
            Error::Usage(msg) => Error::Config(format!("{key}: {msg}")),
            other => other,
        };

        let batch_auto = a.batch.value("algorithm.batch")?.is_none();
        inputs.batch = match a.batch.value("algorithm.batch")? {
            Some(&b) => b,
            None => recommended_batch(mode, &inputs).map_err(|e| keyed("algorithm.batch", e))?,
        };
        let p_auto = a.p.value("algorithm.p")?.is_none();
        let p = match (a.p.value("algorithm.p")?, a.name) {
            (Some(&p), _) => p,
            (None, Algorithm::Gd) => 1.0,
            (None, _) => recommended_p(variant, &inputs).map_err(|e| keyed("algorithm.p", e))?,
        };
        let gamma_max = theoretical_stepsize(variant, &inputs, p).map_err(|e| keyed("algorithm.gamma", e))?;
        let gamma_auto = a.gamma.value("algorithm.gamma")?.is_none();
        let gamma = match a.gamma.value("algorithm.gamma")? {
            Some(&g) => g,
            None => gamma_max * a.gamma_scale,
        };
        let gamma_within_theory = gamma <= gamma_max * (1.0 + 1e-12);
        if !gamma_within_theory {
            log::warn!("gamma = {gamma} exceeds the theoretical maximum {gamma_max}");
        }
        let bound = theoretical_bound(variant, &inputs, gamma, p, a.iterations);

        let mut template = RunConfig::new(a.name, gamma, p, a.iterations, compressor, x0);
        template.batch = inputs.batch;
        template.minibatch = a.minibatch;
        template.clients = clients;
        template.bits_per_float = a.bits_per_float;
        template.lyapunov_mode = mode;
        template.validate(problem.as_ref()).map_err(|e| match e {
            Error::Usage(msg) => Error::Config(format!("algorithm: {msg}")),
            other => other,
        })?;

        let plan = Plan {
            algorithm: a.name,
            variant,
            gamma,
            gamma_auto,
            p,
            p_auto,
            batch: inputs.batch,
            batch_auto,
            minibatch: a.minibatch,
            clients,
            iterations: a.iterations,
            omega: compressor.omega(),
            zeta: compressor.zeta(),
            gamma_max,
            gamma_within_theory,
            bound,
            inputs,
        };
        Ok(Resolved {
            config,
            problem,
            plan,
            template,
        })
    }

    pub fn run_config(&self, seed: u64) -> RunConfig {
        let mut c = self.template.clone();
        c.seed = seed;
        c
    }
}
