//! The single pseudo-random source used by graph generation and weight
//! initialization.
//!
//! The generator is ChaCha8 (as implemented by `rand_chacha`), seeded from a
//! 64-bit integer through `SeedableRng::seed_from_u64`. Uniform reals are
//! formed from the top 53 bits of one 64-bit output, `(x >> 11) * 2^-53`,
//! so every draw lies in `[0, 1)` and the mapping is fully specified here
//! rather than delegated to a distribution library.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Prng(ChaCha8Rng);

impl Prng {
    pub fn new(seed: u64) -> Self {
        Prng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[-bound, bound)`.
    pub fn symmetric(&mut self, bound: f64) -> f64 {
        (2.0 * self.unit() - 1.0) * bound
    }

    /// Uniform in `[lo, hi]` for integers (modulo reduction; the bias is
    /// below 2^-50 for any range used here).
    pub fn int_inclusive(&mut self, lo: usize, hi: usize) -> usize {
        debug_assert!(lo <= hi);
        let span = (hi - lo) as u64 + 1;
        lo + (self.next_u64() % span) as usize
    }

    /// Uniform real in `[lo, hi)`.
    pub fn real(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Prng::new(42);
        let mut b = Prng::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn unit_draws_in_range() {
        let mut r = Prng::new(1);
        for _ in 0..10_000 {
            let x = r.unit();
            assert!((0.0..1.0).contains(&x));
            let y = r.symmetric(0.5);
            assert!((-0.5..0.5).contains(&y));
            let k = r.int_inclusive(5, 7);
            assert!((5..=7).contains(&k));
        }
    }
}
