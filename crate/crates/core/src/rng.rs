//! Seeded pseudo-random numbers.
//!
//! A single, explicitly named generator is used everywhere so that a run is
//! reproducible bit-for-bit from its seed, in any language that implements the
//! same three lines of integer arithmetic. The generator is SplitMix64
//! (Steele, Lea & Flood's `splitmix64` finalizer applied to a Weyl sequence):
//! one 64-bit state, period 2^64, passes BigCrush. It is not cryptographic.

/// SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Derive an independent stream for a sub-task (trial, node, …).
    ///
    /// Mixes the index through one scramble round so that streams for
    /// consecutive indices are unrelated.
    pub fn derive(seed: u64, index: u64) -> Self {
        let mut base = SplitMix64::new(seed);
        let a = base.next_u64();
        SplitMix64::new(a ^ mix(index.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        mix(self.state)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[0, bound)` by rejection; unbiased for every bound.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "next_below: bound must be positive");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % bound;
            }
        }
    }

    /// Uniform usize in `[0, bound)`.
    pub fn next_index(&mut self, bound: usize) -> usize {
        self.next_below(bound as u64) as usize
    }
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
