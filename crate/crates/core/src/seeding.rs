//! Deterministic seed derivation.
//!
//! Every random decision in the pipeline flows from one master seed,
//! expanded per (stage, indices) so that runs are reproducible from a
//! single integer and independent stages never share an RNG stream.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes `master`, a stage tag, and positional indices into a child seed.
///
/// Uses an FNV-1a pass over the tag followed by splitmix64 finalization;
/// platform-independent and stable across releases.
pub fn derive_seed(master: u64, stage: &str, parts: &[u64]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for byte in stage.as_bytes() {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut state = master ^ h;
    for &p in parts {
        state = splitmix64(state.wrapping_add(0x9e3779b97f4a7c15).wrapping_add(p));
    }
    splitmix64(state.wrapping_add(0x9e3779b97f4a7c15))
}

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Seeded RNG for a given (stage, indices) slot.
pub fn rng_for(master: u64, stage: &str, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stage, parts))
}
