//! Stepsizes, switch probabilities, batch sizes and convergence-bound values
//! prescribed by the analysis of the MARINA family.
//!
//! All hidden `Θ(·)` constants are fixed to 1. User-chosen stepsizes above the
//! theoretical maximum are accepted with a warning, never clamped.

use serde::{Deserialize, Serialize};

use crate::compress::Compressor;
use crate::error::{Error, Result};
use crate::problems::Problem;

/// Which theorem a calculation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Marina,
    MarinaPl,
    VrFs,
    VrFsPl,
    VrOnline,
    VrOnlinePl,
    Pp,
    PpPl,
}

impl Variant {
    pub fn is_pl(self) -> bool {
        matches!(
            self,
            Variant::MarinaPl | Variant::VrFsPl | Variant::VrOnlinePl | Variant::PpPl
        )
    }

    pub fn is_online(self) -> bool {
        matches!(self, Variant::VrOnline | Variant::VrOnlinePl)
    }

    /// Same method, other regime.
    pub fn with_pl(self, pl: bool) -> Variant {
        use Variant::*;
        match (self, pl) {
            (Marina | MarinaPl, false) => Marina,
            (Marina | MarinaPl, true) => MarinaPl,
            (VrFs | VrFsPl, false) => VrFs,
            (VrFs | VrFsPl, true) => VrFsPl,
            (VrOnline | VrOnlinePl, false) => VrOnline,
            (VrOnline | VrOnlinePl, true) => VrOnlinePl,
            (Pp | PpPl, false) => Pp,
            (Pp | PpPl, true) => PpPl,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovMode {
    /// `Φ = f − f_* + (γ/2p)‖g − ∇f‖²`.
    Nonconvex,
    /// `Φ = f − f_* + (γ/p)‖g − ∇f‖²`.
    Pl,
}

/// Problem, compressor and run quantities the formulas depend on.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TheoryInputs {
    /// `L`.
    pub smoothness: f64,
    /// `𝓛`.
    pub avg_smoothness: f64,
    /// `μ`.
    pub pl: Option<f64>,
    pub omega: f64,
    pub zeta: f64,
    pub workers: usize,
    pub components: usize,
    pub dim: usize,
    /// `b`, the online batch size.
    pub batch: usize,
    /// `b′`, the minibatch size of compressed differences.
    pub minibatch: usize,
    /// `r`, clients per partial-participation round.
    pub clients: usize,
    /// `σ² = (1/n) Σ σ_i²`.
    pub variance: f64,
    /// `Δ0 = f(x⁰) − f_*`.
    pub delta0: f64,
    pub epsilon: f64,
}

impl TheoryInputs {
    /// Everything except `b`, `b′`, `r`, `Δ0` and `ε`, which belong to the run.
    pub fn from_problem<P: Problem + ?Sized>(problem: &P, compressor: &Compressor) -> Self {
        let c = problem.constants();
        TheoryInputs {
            smoothness: c.smoothness,
            avg_smoothness: c.avg_smoothness,
            pl: c.pl,
            omega: compressor.omega(),
            zeta: compressor.zeta(),
            workers: problem.num_workers(),
            components: problem.num_components(),
            dim: problem.dim(),
            batch: 1,
            minibatch: 1,
            clients: problem.num_workers(),
            variance: c.variance(),
            delta0: 0.0,
            epsilon: 0.0,
        }
    }

    fn mu(&self) -> Result<f64> {
        match self.pl {
            Some(mu) if mu > 0.0 => Ok(mu),
            _ => Err(Error::usage("PL variant needs a positive PL constant")),
        }
    }
}

/// Largest stepsize the matching theorem allows, for switch probability `p`.
pub fn theoretical_stepsize(variant: Variant, inputs: &TheoryInputs, p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::usage(format!("p must lie in (0, 1], got {p}")));
    }
    let l = inputs.smoothness;
    if !(l > 0.0) {
        return Err(Error::usage(format!("smoothness constant must be positive, got {l}")));
    }
    let w = inputs.omega;
    let n = inputs.workers as f64;
    let factor = if variant.is_pl() { 2.0 } else { 1.0 };
    let base = match variant {
        Variant::Marina | Variant::MarinaPl => {
            require(inputs.workers, "workers")?;
            1.0 / (l * (1.0 + (factor * (1.0 - p) * w / (p * n)).sqrt()))
        }
        Variant::VrFs | Variant::VrFsPl | Variant::VrOnline | Variant::VrOnlinePl => {
            require(inputs.workers, "workers")?;
            require(inputs.minibatch, "minibatch")?;
            let la = inputs.avg_smoothness;
            let inner = w * l * l + (1.0 + w) * la * la / inputs.minibatch as f64;
            1.0 / (l + (factor * (1.0 - p) / (p * n) * inner).sqrt())
        }
        Variant::Pp | Variant::PpPl => {
            require(inputs.clients, "clients")?;
            let r = inputs.clients as f64;
            1.0 / (l * (1.0 + (factor * (1.0 - p) * (1.0 + w) / (p * r)).sqrt()))
        }
    };
    if variant.is_pl() {
        Ok(base.min(p / (2.0 * inputs.mu()?)))
    } else {
        Ok(base)
    }
}

fn require(count: usize, name: &str) -> Result<()> {
    if count == 0 {
        Err(Error::usage(format!("{name} must be positive")))
    } else {
        Ok(())
    }
}

/// Switch probability balancing the dense and compressed rounds.
pub fn recommended_p(variant: Variant, inputs: &TheoryInputs) -> Result<f64> {
    if inputs.dim == 0 {
        return Err(Error::usage("dimension must be positive"));
    }
    let density = inputs.zeta / inputs.dim as f64;
    let p = match variant.with_pl(false) {
        Variant::Marina => density,
        Variant::VrFs => {
            let b = inputs.minibatch as f64;
            density.min(b / (inputs.components as f64 + b))
        }
        Variant::VrOnline => {
            let b = inputs.minibatch as f64;
            density.min(b / (inputs.batch as f64 + b))
        }
        Variant::Pp => {
            require(inputs.workers, "workers")?;
            density * inputs.clients as f64 / inputs.workers as f64
        }
        _ => unreachable!("with_pl(false) yields a nonconvex variant"),
    };
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::usage(format!("recommended p = {p} is outside (0, 1]")));
    }
    Ok(p)
}

/// Online batch size `b = max(1, ⌈σ²/(nε²)⌉)`, or `⌈σ²/(nμε)⌉` under PL.
pub fn recommended_batch(mode: LyapunovMode, inputs: &TheoryInputs) -> Result<usize> {
    let eps = inputs.epsilon;
    if !(eps > 0.0) {
        return Err(Error::usage(format!("epsilon must be positive, got {eps}")));
    }
    let n = inputs.workers.max(1) as f64;
    let raw = match mode {
        LyapunovMode::Nonconvex => inputs.variance / (n * eps * eps),
        LyapunovMode::Pl => inputs.variance / (n * inputs.mu()? * eps),
    };
    Ok((raw.ceil() as usize).max(1))
}

/// Right-hand side of the expectation bound after `K` iterations.
///
/// Nonconvex variants bound `E‖∇f(x̂)‖²`; PL variants bound `E[f(x^K) − f_*]`.
pub fn theoretical_bound(
    variant: Variant,
    inputs: &TheoryInputs,
    gamma: f64,
    p: f64,
    iterations: usize,
) -> f64 {
    if let Ok(max) = theoretical_stepsize(variant, inputs, p) {
        if gamma > max * (1.0 + 1e-12) {
            log::warn!("stepsize {gamma} exceeds the theoretical maximum {max}; bound does not apply");
        }
    }
    let k = iterations as f64;
    let noise = |denominator: f64| inputs.variance / (inputs.workers.max(1) as f64 * inputs.batch.max(1) as f64 * denominator);
    if variant.is_pl() {
        let mu = inputs.pl.unwrap_or(0.0);
        let contraction = (1.0 - gamma * mu).powf(k) * inputs.delta0;
        if variant.is_online() {
            contraction + noise(mu)
        } else {
            contraction
        }
    } else {
        let descent = 2.0 * inputs.delta0 / (gamma * k);
        if variant.is_online() {
            descent + noise(1.0) * (1.0 + 1.0 / (p * k))
        } else {
            descent
        }
    }
}

/// `f(x) − f_* + c‖g − ∇f(x)‖²` with `c = γ/(2p)` or `γ/p`.
pub fn lyapunov<P: Problem + ?Sized>(
    problem: &P,
    x: &[f64],
    g: &[f64],
    gamma: f64,
    p: f64,
    mode: LyapunovMode,
) -> f64 {
    let grad = problem.grad(x);
    let err: f64 = g.iter().zip(grad.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    lyapunov_from_parts(problem.optimality_gap(x), err, gamma, p, mode)
}

pub fn lyapunov_from_parts(gap: f64, est_err_sq: f64, gamma: f64, p: f64, mode: LyapunovMode) -> f64 {
    let coef = match mode {
        LyapunovMode::Nonconvex => gamma / (2.0 * p),
        LyapunovMode::Pl => gamma / p,
    };
    gap + coef * est_err_sq
}
