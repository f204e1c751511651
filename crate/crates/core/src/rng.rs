//! SplitMix64 counter-stream generator.
//!
//! The generator is fixed (rather than pulled from a crate) so that
//! measurement masks can be regenerated bit-identically from a stored seed by
//! any implementation that follows the published SplitMix64 constants.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform double in `[0, 1)` built from the top 53 bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Unbiased integer in `0..bound` (Lemire's multiply-and-reject).
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Standard normal draw via Box-Muller; the sine branch is discarded so
    /// that each draw consumes exactly two uniforms.
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    /// `count` indices drawn i.i.d. uniformly from `0..population`, with
    /// replacement.
    pub fn uniform_indices(&mut self, count: usize, population: usize) -> Result<Vec<usize>> {
        if count == 0 || population == 0 {
            return Err(invalid(format!(
                "index sampling needs positive count and population, got B={count}, I={population}"
            )));
        }
        Ok((0..count).map(|_| self.below(population as u64) as usize).collect())
    }
}
