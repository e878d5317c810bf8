//! Deterministic simulations of the MARINA family of communication-compressed
//! distributed optimizers, with exact communication and oracle accounting and
//! a calculator for the stepsizes, switch probabilities and convergence bounds
//! that the methods' analysis prescribes.
//!
//! The crate is organised bottom-up:
//!
//! * [`numcore`]: dense/sparse vectors, named reproducible random streams and a
//!   finite-difference gradient checker.
//! * [`problems`]: objectives with worker-indexed gradient oracles, LibSVM
//!   ingestion and worker sharding.
//! * [`compress`]: unbiased compression operators with their variance
//!   parameter and expected density.
//! * [`algorithms`]: GD, MARINA, VR-MARINA (finite-sum and online) and
//!   PP-MARINA as per-iteration server/worker state machines.
//! * [`theory`]: stepsize, probability, batch-size and bound calculators.
//! * [`cli`]: experiment configuration, execution, sweeps and verification.

pub mod algorithms;
pub mod cli;
pub mod compress;
pub mod error;
pub mod numcore;
pub mod problems;
pub mod theory;

pub use error::{Error, Result};
