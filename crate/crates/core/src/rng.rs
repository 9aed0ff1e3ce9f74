//! Counter-based pseudo-random generation.
//!
//! Every draw is a pure function of `(seed, tag, counter)`, so sampled
//! workloads are reproducible regardless of thread count or evaluation
//! order. There is no mutable generator state to share.

/// splitmix64 finalizer; good avalanche, cheap.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A keyed, stateless random source. Values are derived from the key and an
/// explicit counter; cloning or sharing it is free of ordering hazards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyedRng {
    key: u64,
}

impl KeyedRng {
    pub fn new(seed: u64) -> Self {
        KeyedRng { key: mix(seed) }
    }

    /// Derive a sub-generator for a named lane (e.g. one per dimension or
    /// per sample stream).
    pub fn fork(&self, tag: u64) -> Self {
        KeyedRng {
            key: mix(self.key ^ mix(tag ^ 0xa076_1d64_78bd_642f)),
        }
    }

    pub fn u64_at(&self, counter: u64) -> u64 {
        mix(self.key.wrapping_add(mix(counter)))
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn f64_at(&self, counter: u64) -> f64 {
        (self.u64_at(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn f64_in(&self, counter: u64, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.f64_at(counter)
    }

    /// Uniform in 0..n via widening multiply (bias < 2^-64, irrelevant here).
    pub fn index_at(&self, counter: u64, n: usize) -> usize {
        debug_assert!(n > 0);
        (((self.u64_at(counter) as u128) * (n as u128)) >> 64) as usize
    }
}
