//! Seeded randomness with a fixed, portable generator.
//!
//! Every randomized operation in this crate draws from a [`RandomSource`] so
//! that a run is reproducible bit-for-bit from its seed alone. Per-item work
//! uses numbered substreams, which keeps results independent of evaluation
//! order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Name of the generator behind [`RandomSource`], recorded in provenance
/// output so results stay interpretable if the default ever changes.
pub const RNG_ALGORITHM: &str = "chacha12";

/// A seed from which deterministic generator streams are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSource {
    seed: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The root stream.
    pub fn rng(&self) -> ChaCha12Rng {
        self.stream(0)
    }

    /// An independent substream identified by `id`. Streams with different
    /// ids never overlap, so callers may hand stream `i` to item `i` and
    /// process items in any order.
    pub fn stream(&self, id: u64) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn same_seed_same_bytes() {
        let a: Vec<u64> = (0..8).map(|_| RandomSource::new(7).rng().next_u64()).collect();
        assert!(a.iter().all(|&x| x == a[0]));
        let mut r1 = RandomSource::new(7).rng();
        let mut r2 = RandomSource::new(7).rng();
        for _ in 0..100 {
            assert_eq!(r1.next_u64(), r2.next_u64());
        }
    }

    #[test]
    fn different_seeds_or_streams_diverge() {
        let mut base = RandomSource::new(7).rng();
        let mut other_seed = RandomSource::new(8).rng();
        let mut other_stream = RandomSource::new(7).stream(1);
        let b: Vec<u64> = (0..4).map(|_| base.next_u64()).collect();
        let s: Vec<u64> = (0..4).map(|_| other_seed.next_u64()).collect();
        let t: Vec<u64> = (0..4).map(|_| other_stream.next_u64()).collect();
        assert_ne!(b, s);
        assert_ne!(b, t);
    }
}
