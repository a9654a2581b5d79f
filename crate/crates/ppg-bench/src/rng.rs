//! Deterministic counter-based seeding and a fast portable RNG.
//!
//! Every random quantity in the toolkit is drawn from a [`SimRng`] whose seed
//! is derived by hashing a master seed together with structural counters
//! (frame index, repetition, case id). Results are therefore identical across
//! platforms and across any degree of parallelism.

use rand::RngCore;

/// splitmix64 finalizer; a solid 64-bit mixer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and one counter.
pub fn derive_seed(parent: u64, counter: u64) -> u64 {
    mix64(mix64(parent) ^ mix64(counter.wrapping_add(0xA5A5_A5A5_A5A5_A5A5)))
}

/// Derive a child seed from a parent seed and a string key (e.g. a case id).
pub fn derive_seed_str(parent: u64, key: &str) -> u64 {
    let mut h = mix64(parent);
    for &b in key.as_bytes() {
        h = mix64(h ^ b as u64);
    }
    h
}

/// xoshiro256++ seeded through splitmix64. Fast, portable, reproducible.
#[derive(Clone, Debug)]
pub struct SimRng {
    s: [u64; 4],
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        let mut z = seed;
        let mut s = [0u64; 4];
        for slot in &mut s {
            z = z.wrapping_add(0x9E3779B97F4A7C15);
            *slot = mix64(z);
        }
        Self { s }
    }

    #[inline(always)]
    pub fn next(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform f64 in [0, 1).
    #[inline(always)]
    pub fn uniform(&mut self) -> f64 {
        (self.next() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for SimRng {
    #[inline(always)]
    fn next_u32(&mut self) -> u32 {
        (self.next() >> 32) as u32
    }

    #[inline(always)]
    fn next_u64(&mut self) -> u64 {
        self.next()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let v = self.next().to_le_bytes();
            chunk.copy_from_slice(&v[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}
