//! Deterministic random number generation.
//!
//! All randomness in this crate flows through [`XorShift64Star`], a
//! xorshift64* generator (shifts 12/25/27, multiplier `0x2545F4914F6CDD1D`)
//! seeded through one round of SplitMix64 so that any 64-bit seed, including
//! zero, yields a valid nonzero state. The algorithms are fixed so that
//! trajectories can be reproduced bit-for-bit by other implementations.

/// SplitMix64 step: advances `state` by the golden-ratio increment and
/// returns the mixed output.
#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed from a base seed and a stream tag.
///
/// Distinct tags give statistically independent streams for the same base
/// seed, so dataset generation, splitting, weight init and per-epoch
/// shuffling never consume from each other's sequences.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut s = base;
    let a = splitmix64(&mut s);
    let mut t = stream.wrapping_add(0x9E37_79B9_7F4A_7C15);
    a ^ splitmix64(&mut t)
}

/// Stream tags used by the crate. Public so that external tooling can
/// reproduce any individual stream.
pub mod stream {
    /// Weight initialization.
    pub const INIT: u64 = 1;
    /// Per-epoch schedule shuffling (combined with the epoch index).
    pub const SCHEDULE: u64 = 2;
    /// Train/test splitting.
    pub const SPLIT: u64 = 3;
    /// Synthetic blob generation.
    pub const BLOBS: u64 = 4;
}

/// xorshift64* generator.
#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
    /// Spare normal deviate from the last Box-Muller draw.
    cached_normal: Option<f64>,
}

impl XorShift64Star {
    /// Creates a generator from an arbitrary seed. The seed is passed
    /// through SplitMix64 once, which maps every input (zero included) to a
    /// nonzero xorshift state.
    pub fn new(seed: u64) -> Self {
        let mut s = seed;
        let mut state = splitmix64(&mut s);
        if state == 0 {
            state = 0x9E37_79B9_7F4A_7C15;
        }
        Self {
            state,
            cached_normal: None,
        }
    }

    /// Next raw 64-bit output.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform f64 in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform f64 in [lo, hi).
    #[inline]
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n) via the multiply-shift map
    /// `(x * n) >> 64`. Deterministic and portable; the modulo bias is
    /// below 2^-32 for every n used here.
    #[inline]
    pub fn next_below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Standard normal deviate via Box-Muller. Draws two uniforms and
    /// caches the second deviate, so consecutive calls consume the
    /// underlying stream in a fixed pattern.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.cached_normal.take() {
            return z;
        }
        // u1 in (0, 1] so the log is finite.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.cached_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// In-place Fisher-Yates shuffle, iterating from the last element down.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i + 1);
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = XorShift64Star::new(42);
        let mut b = XorShift64Star::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn zero_seed_is_valid() {
        let mut rng = XorShift64Star::new(0);
        let first = rng.next_u64();
        assert_ne!(first, 0);
        assert_ne!(first, rng.next_u64());
    }

    #[test]
    fn uniform_unit_interval() {
        let mut rng = XorShift64Star::new(7);
        let mut sum = 0.0;
        for _ in 0..10_000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
            sum += x;
        }
        let mean = sum / 10_000.0;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn normals_have_unit_scale() {
        let mut rng = XorShift64Star::new(9);
        let n = 20_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let z = rng.next_normal();
            sum += z;
            sq += z * z;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = XorShift64Star::new(3);
        let mut v: Vec<usize> = (0..50).collect();
        rng.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(v, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn derived_streams_differ() {
        let a = derive_seed(42, stream::INIT);
        let b = derive_seed(42, stream::SPLIT);
        assert_ne!(a, b);
        assert_eq!(a, derive_seed(42, stream::INIT));
    }
}
