//! Deterministic, splittable random streams.
//!
//! Every stream is a ChaCha8 keystream addressed by `(seed, stream id)`, so a
//! given pair yields the same draws on every platform and sub-streams can be
//! handed to trials or nodes in any order.

use rand::seq::index;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh stream derived from this one's address and `id`; independent
    /// of how many draws have already been taken from `self`.
    pub fn substream(&self, id: u64) -> Rng {
        let derived = splitmix64(splitmix64(self.stream) ^ id.wrapping_mul(0xD6E8_FEB8_6659_FD93));
        Rng::with_stream(self.seed, derived)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// `amount` distinct indices from `0..n`, in ascending order.
    pub fn distinct_indices(&mut self, n: usize, amount: usize) -> Vec<usize> {
        let mut picked = index::sample(&mut self.inner, n, amount).into_vec();
        picked.sort_unstable();
        picked
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random::<u64>()
    }
}
