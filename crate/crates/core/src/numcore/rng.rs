//! Named, reproducible random streams.
//!
//! A stream is identified by `(seed, label)`. The generator is ChaCha8 in
//! counter mode: the 256-bit key is expanded from `seed` by
//! `rand_core::SeedableRng::seed_from_u64` (PCG32 expansion), and the 64-bit
//! ChaCha stream nonce is the FNV-1a hash of the label. Different labels
//! therefore address disjoint keystreams of the same key, and a given
//! `(seed, label)` pair yields the same sequence on every platform.
//!
//! Labels used by the engines:
//!
//! | label                  | randomness                          |
//! |------------------------|-------------------------------------|
//! | `coin`                 | switch coin `c_k`                   |
//! | `compressor/worker-i`  | compression operator of worker `i`  |
//! | `minibatch/worker-i`   | minibatch / stochastic samples      |
//! | `clients`              | partial-participation client draws  |
//! | `output-select`        | returned iterate index              |
//! | `data-gen`             | synthetic problem generation        |

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const COIN: &str = "coin";
pub const CLIENTS: &str = "clients";
pub const OUTPUT_SELECT: &str = "output-select";
pub const DATA_GEN: &str = "data-gen";

pub fn compressor_label(worker: usize) -> String {
    format!("compressor/worker-{worker}")
}

pub fn minibatch_label(worker: usize) -> String {
    format!("minibatch/worker-{worker}")
}

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    label: String,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, label: &str) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(fnv1a64(label.as_bytes()));
        RngStream {
            seed,
            label: label.to_owned(),
            rng,
        }
    }

    /// Stream for `"{label}/{suffix}"` under the same seed.
    pub fn child(&self, suffix: &str) -> Self {
        RngStream::new(self.seed, &format!("{}/{}", self.label, suffix))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform real in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        self.rng.random_range(0..n)
    }

    /// `true` with probability `p`; `p >= 1` always yields `true`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
