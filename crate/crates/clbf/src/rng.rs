//! Deterministic random number generation.
//!
//! The generator is SplitMix64: `state += 0x9E3779B97F4A7C15` per draw, the
//! incremented state is passed through the finalizer in [`crate::hash::mix64`].
//! It is effectively counter-based (output i is a pure function of
//! `seed + (i+1)*GOLDEN`), so streams can be re-created or split at any
//! offset, and datasets regenerate identically on any platform.
//!
//! Substreams are derived with [`substream`], which mixes a tag and an
//! index into the seed. Dataset generators give every sample its own
//! substream so parallel generation could never change the output.

use crate::hash::mix64;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `(0, 1]`, safe as a logarithm argument.
    #[inline]
    pub fn next_open_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    #[inline]
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// One Box-Muller pair of independent standard normal draws.
    #[inline]
    pub fn next_gaussian_pair(&mut self) -> (f64, f64) {
        let u1 = self.next_open_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        (r * theta.cos(), r * theta.sin())
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = (self.next_u64() % (i as u64 + 1)) as usize;
            items.swap(i, j);
        }
    }
}

/// Seed for an independent substream identified by `(tag, index)`.
pub fn substream(seed: u64, tag: u64, index: u64) -> SplitMix64 {
    SplitMix64::new(mix64(mix64(mix64(seed) ^ tag) ^ index))
}
