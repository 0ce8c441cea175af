//! Deterministic pseudo-random numbers for instance generation and probes.
//!
//! The generator is SplitMix64, chosen because it is tiny and easy to
//! reproduce bit-for-bit in any language:
//!
//! ```text
//! state  <- state + 0x9E3779B97F4A7C15           (wrapping)
//! z      <- state
//! z      <- (z xor (z >> 30)) * 0xBF58476D1CE4E5B9 (wrapping)
//! z      <- (z xor (z >> 27)) * 0x94D049BB133111EB (wrapping)
//! output <- z xor (z >> 31)
//! ```
//!
//! Uniform doubles take the top 53 bits: `(output >> 11) * 2^-53`, in `[0, 1)`.
//! Standard normals use one Box-Muller draw per call (the sine branch is
//! discarded): `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)` with two consecutive
//! uniforms `u1`, `u2`.

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn gaussian_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.gaussian()).collect()
    }

    /// Uniform index in `0..n` (multiply-shift, no modulo bias worth caring about at this scale).
    pub fn index(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}
