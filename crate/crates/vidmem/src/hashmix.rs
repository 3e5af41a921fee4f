//! Tiny deterministic hash and mixing primitives.
//!
//! These are spelled out here (rather than pulled from std's hasher) because
//! mock embeddings and seed derivation must be bit-stable across platforms
//! and releases.

/// SplitMix64 step.
pub(crate) fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform f64 in [-1, 1) from the top 53 bits of a SplitMix64 step.
pub(crate) fn unit_uniform(state: &mut u64) -> f64 {
    let x = splitmix64(state);
    ((x >> 11) as f64) * (1.0 / (1u64 << 52) as f64) - 1.0
}

/// FNV-1a 64-bit hash.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// Derives an independent sub-seed from a base seed and a salt.
pub(crate) fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut state = seed ^ salt;
    splitmix64(&mut state)
}
