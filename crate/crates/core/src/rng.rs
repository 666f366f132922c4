//! Seeded pseudo-random source shared by the fixture generator, data
//! splitting and minibatch shuffling.
//!
//! The generator is Marsaglia's xorshift128 (`rand_xorshift::XorShiftRng`,
//! shifts 11/8/19), seeded through `SeedableRng::seed_from_u64` (PCG32 seed
//! expansion from `rand_core`). Everything derived from the raw stream is
//! defined here explicitly so the sequence can be reproduced elsewhere:
//!
//! - `next_u64`: two consecutive 32-bit outputs, low word first.
//! - `uniform`: `(next_u64 >> 11) * 2^-53`, in `[0, 1)`.
//! - `below(n)`: `(next_u64 as u128 * n) >> 64`.
//! - `normal`: Box-Muller cosine branch with `u1 = 1 - uniform`, `u2 = uniform`.

use rand_core::{RngCore, SeedableRng};
use rand_xorshift::XorShiftRng;

#[derive(Debug, Clone)]
pub struct Prng {
    inner: XorShiftRng,
}

impl Prng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: XorShiftRng::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. Returns 0 when `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Uniform integer in the inclusive range `[lo, hi]`.
    pub fn between(&mut self, lo: usize, hi: usize) -> usize {
        debug_assert!(lo <= hi);
        lo + self.below(hi - lo + 1)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Fisher-Yates shuffle, iterating from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
