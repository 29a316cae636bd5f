//! Deterministic, splittable randomness.
//!
//! A [`SeededRng`] is a ChaCha8 stream addressed by `(seed, stream_id)`. Every
//! loss sample consumes exactly one `u64` from it: the word seeds a short-lived
//! [`SampleRng`] that performs whatever variable-length work the sample needs
//! (Gaussian draws, rejection for truncated designs). Draw counts on the parent
//! stream therefore never depend on rejection outcomes.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_xoshiro::Xoshiro256PlusPlus;

const TWO_PI: f64 = std::f64::consts::TAU;

/// Uniform and Gaussian draws with a fixed number of underlying words.
pub trait Draws: RngCore {
    /// Uniform on the open interval (0, 1); one `u64`.
    fn uniform_open01(&mut self) -> f64 {
        // 53 random mantissa bits shifted off zero.
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal by Box–Muller (cosine branch only); always two `u64`s.
    fn standard_normal(&mut self) -> f64 {
        let u1 = self.uniform_open01();
        let u2 = self.uniform_open01();
        (-2.0 * u1.ln()).sqrt() * (TWO_PI * u2).cos()
    }

    fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.standard_normal();
        }
    }
}

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SeededRng { seed, stream, inner }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, 0)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Fresh generator on the same seed with a different stream id.
    pub fn split(&self, stream: u64) -> SeededRng {
        SeededRng::new(self.seed, stream)
    }

    /// Sub-generator for one loss sample. Consumes exactly one word.
    pub fn sample_rng(&mut self) -> SampleRng {
        SampleRng::from_key(self.next_u64())
    }

    /// Uniform integer in `1..=m`.
    pub fn uniform_index1(&mut self, m: u64) -> u64 {
        self.inner.random_range(1..=m)
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

impl Draws for SeededRng {}

/// Per-sample generator derived from a single key word.
#[derive(Debug, Clone)]
pub struct SampleRng(Xoshiro256PlusPlus);

impl SampleRng {
    pub fn from_key(key: u64) -> Self {
        SampleRng(Xoshiro256PlusPlus::seed_from_u64(key))
    }

    /// Index drawn from a cumulative distribution (last entry ≈ 1).
    pub fn categorical(&mut self, cumulative: &[f64]) -> usize {
        let u = self.uniform_open01() * cumulative[cumulative.len() - 1];
        cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
    }
}

impl RngCore for SampleRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

impl Draws for SampleRng {}
