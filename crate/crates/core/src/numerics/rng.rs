//! Seedable, platform-independent random streams.
//!
//! Every stream is a ChaCha8 generator whose 64-bit seed is derived by
//! SplitMix64-mixing a master seed with a purpose label and any number of
//! integer coordinates. Weight initialization, dropout masks, batch shuffling
//! and stimulus sampling each draw from their own stream, so changing one
//! consumer never shifts the numbers seen by another.

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct Rng {
    inner: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn label_hash(label: &str) -> u64 {
    // FNV-1a
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Derives a child seed from `(seed, label, coords)`.
pub fn derive_seed(seed: u64, label: &str, coords: &[u64]) -> u64 {
    let mut h = splitmix64(seed ^ label_hash(label));
    for &c in coords {
        h = splitmix64(h ^ c);
    }
    h
}

impl Rng {
    pub fn seed_from(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for a named purpose.
    pub fn stream(seed: u64, label: &str, coords: &[u64]) -> Self {
        Self::seed_from(derive_seed(seed, label, coords))
    }

    /// Splits off a child stream, advancing this one by a single draw.
    pub fn fork(&mut self, label: &str) -> Self {
        let s = self.inner.next_u64();
        Self::stream(s, label, &[])
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        self.inner.random_range(0..n as u64) as usize
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int_inclusive(&mut self, lo: i64, hi: i64) -> i64 {
        self.inner.random_range(lo..=hi)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Fisher-Yates shuffle using `below`, independent of pointer width.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng::seed_from(42);
        let mut b = Rng::seed_from(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_are_independent_of_label() {
        let mut a = Rng::stream(7, "weights", &[]);
        let mut b = Rng::stream(7, "dropout", &[]);
        assert_ne!(a.next_u64(), b.next_u64());
        assert_ne!(derive_seed(1, "x", &[1, 2]), derive_seed(1, "x", &[2, 1]));
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut r = Rng::seed_from(3);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn permutation_is_a_permutation() {
        let mut r = Rng::seed_from(5);
        let mut p = r.permutation(50);
        p.sort_unstable();
        assert_eq!(p, (0..50).collect::<Vec<_>>());
    }
}
