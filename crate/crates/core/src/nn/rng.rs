use rand::seq::index;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Seeded, platform-independent random source.
///
/// Backed by ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`), whose output
/// stream is specified bit-for-bit and does not depend on the host.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// One draw from `U[lo, hi)` using 53 random mantissa bits.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u: f64 = self.inner.random();
        lo + (hi - lo) * u
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// `count` distinct indices from `0..n`, in draw order.
    pub fn distinct_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        index::sample(&mut self.inner, n, count).into_vec()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random()
    }
}
