//! Portable pseudo-random generation for scene synthesis and seeded draws.
//!
//! The generator is xoshiro256++ seeded through the SplitMix64 finalizer,
//! so every stream is fully determined by `(seed, role, index)` and is
//! bit-identical across platforms. Roles separate the independent random
//! streams of one scene (targets, interferers, noise, parameter draws) so
//! that, e.g., changing the interferer count never perturbs the targets.

/// SplitMix64 finalizer; used for seeding and stream key derivation.
pub fn mix64(z: u64) -> u64 {
    let z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    let z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 sequence generator.
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
        mix64(self.state)
    }
}

/// xoshiro256++ by Blackman and Vigna.
#[derive(Debug, Clone)]
pub struct Xoshiro256PlusPlus {
    s: [u64; 4],
}

impl Xoshiro256PlusPlus {
    /// Seeds the full 256-bit state from a 64-bit seed via SplitMix64.
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = SplitMix64::new(seed);
        Self {
            s: [sm.next_u64(), sm.next_u64(), sm.next_u64(), sm.next_u64()],
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform in [-1, 1).
    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }

    /// Uniform integer in [0, n). n must be nonzero.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (((self.next_u64() as u128) * (n as u128)) >> 64) as usize
    }
}

/// Derives the generator for one named stream of a seeded computation.
///
/// The key absorbs `seed`, `role`, and `index` in sequence through the
/// SplitMix64 finalizer, so distinct tuples yield independent streams.
pub fn stream(seed: u64, role: u64, index: u64) -> Xoshiro256PlusPlus {
    let mut key = mix64(seed ^ 0x9E37_79B9_7F4A_7C15);
    key = mix64(key ^ role.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    key = mix64(key ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    Xoshiro256PlusPlus::from_seed(key)
}
