//! Keyed deterministic random streams.
//!
//! Every random decision in a sample draws from a stream keyed by
//! `(global_seed, sample_index, purpose)`, so samples can be generated in any
//! order, on any number of threads, and still come out bit-identical.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// A ChaCha8 stream derived from a `(seed, index, label)` triple.
#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(global_seed: u64, sample_index: u64, label: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"colonforge.rng.v1");
        hasher.update(global_seed.to_le_bytes());
        hasher.update(sample_index.to_le_bytes());
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        Self {
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    /// Uniform draw in `[-half_width, half_width]`; exactly zero when `half_width == 0`.
    pub fn symmetric(&mut self, half_width: f64) -> f64 {
        let u = (self.inner.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        (2.0 * u - 1.0) * half_width
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.inner.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }

    /// Uniform index in `lo..=hi`.
    pub fn index_inclusive(&mut self, lo: usize, hi: usize) -> usize {
        debug_assert!(lo <= hi);
        let span = (hi - lo) as u64 + 1;
        lo + (self.inner.next_u64() % span) as usize
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
