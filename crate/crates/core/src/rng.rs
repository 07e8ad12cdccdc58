//! Deterministic random streams.
//!
//! Every random draw in the crate (share masks, class coins, random
//! plaintexts, measurement noise) comes from [`SplitMix64`], so a run is fully
//! determined by its base seed and can be reproduced bit for bit by any other
//! implementation of the same generator.
//!
//! Stream layout:
//!
//! * `next_u64` is the reference SplitMix64 output function (increment
//!   `0x9E3779B97F4A7C15`, multipliers `0xBF58476D1CE4E5B9` and
//!   `0x94D049BB133111EB`, shifts 30/27/31).
//! * `next_nibble` consumes one word and keeps its top four bits.
//! * `next_gaussian` consumes two words `a`, `b` and returns
//!   `sqrt(-2 ln u1) * cos(2 pi u2)` with `u1 = 1 - (a >> 11) / 2^53` and
//!   `u2 = (b >> 11) / 2^53`. The sine branch is discarded.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Finalizer shared by the stream and by seed derivation.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th independent child stream of `base`.
///
/// Used to give every simulated trace its own stream, so results do not
/// depend on the order in which traces are produced.
#[inline]
pub fn derive_seed(base: u64, index: u64) -> u64 {
    mix64(base ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform value in `0..16`.
    #[inline]
    pub fn next_nibble(&mut self) -> u8 {
        (self.next_u64() >> 60) as u8
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal sample (Box-Muller, cosine branch only).
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn next_bool(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }
}
