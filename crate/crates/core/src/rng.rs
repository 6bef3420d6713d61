//! Seeded random streams.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A deterministic random stream keyed by a 64-bit seed.
///
/// Two streams built from the same seed produce the same sequence. Child
/// streams obtained with [`RngStream::derive`] depend only on the parent seed
/// and the key, never on how much of the parent has been consumed, so work
/// split across threads stays reproducible.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream for `key`.
    pub fn derive(&self, key: u64) -> Self {
        Self::new(mix_seed(self.seed, key))
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn open01(&mut self) -> f64 {
        // 53 random mantissa bits, shifted half a step off zero.
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for RngStream {
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

/// Finite categorical law sampled by inverting its cumulative weights.
#[derive(Debug, Clone)]
pub struct Categorical {
    cumulative: Vec<f64>,
}

impl Categorical {
    /// Weights must be non-negative with a positive sum; they need not be
    /// normalized.
    pub fn new(weights: &[f64]) -> Option<Self> {
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(weights.len());
        for &w in weights {
            if !(w >= 0.0) || !w.is_finite() {
                return None;
            }
            acc += w;
            cumulative.push(acc);
        }
        if acc > 0.0 {
            Some(Self { cumulative })
        } else {
            None
        }
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().expect("non-empty")
    }

    /// Probability of index `k`.
    pub fn prob(&self, k: usize) -> f64 {
        let prev = if k == 0 { 0.0 } else { self.cumulative[k - 1] };
        (self.cumulative[k] - prev) / self.total()
    }

    pub fn sample(&self, rng: &mut RngStream) -> usize {
        let t = rng.open01() * self.total();
        let k = self.cumulative.partition_point(|&c| c <= t);
        // zero-weight trailing entries can never be chosen
        let mut k = k.min(self.cumulative.len() - 1);
        while k > 0 && self.cumulative[k] == self.cumulative[k - 1] {
            k -= 1;
        }
        k
    }
}

/// SplitMix64 finalizer applied to a (seed, key) combination.
pub fn mix_seed(seed: u64, key: u64) -> u64 {
    let mut z = seed ^ key.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
