//! Portable seeded randomness.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)` and then moved to stream `stream` via `set_stream`.
//! Every derived draw is defined from raw `next_u64` outputs so another
//! implementation with a ChaCha8 core reproduces the same datasets:
//!
//! - unit float: `(x >> 11) · 2⁻⁵³`, in `[0, 1)`
//! - uniform on `[lo, hi)`: `lo + (hi − lo)·unit`
//! - standard normal: Box–Muller, `sqrt(−2 ln(1 − u1)) · cos(2π·u2)`, one value per call
//! - index below `n`: `(x · n) >> 64` using a 128-bit product
//! - shuffle: Fisher–Yates from the last index down, `j = index_below(i + 1)`

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream used for dataset generation.
pub const STREAM_DATA: u64 = 0;
/// Stream used for model weight initialization.
pub const STREAM_INIT: u64 = 1;
/// Stream used for train/validation splits.
pub const STREAM_SPLIT: u64 = 2;
/// Per-epoch shuffle streams start here: epoch `e` (1-based) uses `STREAM_SHUFFLE_BASE + e`.
pub const STREAM_SHUFFLE_BASE: u64 = 1 << 32;

#[derive(Clone, Debug)]
pub struct SeededRng(ChaCha8Rng);

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SeededRng(inner)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.unit();
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn index_below(&mut self, n: usize) -> usize {
        ((u128::from(self.next_u64()) * n as u128) >> 64) as usize
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index_below(i + 1);
            items.swap(i, j);
        }
    }
}
