//! Seeded generator factory. Every random draw in the crate comes from a
//! stream keyed by `(seed, purpose)`, so runs are reproducible and streams
//! for different purposes (or different clips) never alias.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// FNV-1a; stable across platforms and toolchains, unlike `DefaultHasher`.
pub fn stable_hash(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic generator for `purpose` under the run seed.
pub fn rng_for(seed: u64, purpose: &str) -> Rng {
    Rng::seed_from_u64(splitmix(seed ^ stable_hash(purpose)))
}
