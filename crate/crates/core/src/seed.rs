//! Seed derivation.
//!
//! All randomness in a run flows from one user seed. Each consumer derives
//! its own stream as `seed + fnv1a64(scope)` (wrapping), so adding a new
//! consumer never perturbs the streams of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a. Stable across platforms and releases.
pub fn stable_hash(scope: &str) -> u64 {
    scope.bytes().fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

pub fn derive_seed(seed: u64, scope: &str) -> u64 {
    seed.wrapping_add(stable_hash(scope))
}

pub fn rng_for(seed: u64, scope: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, scope))
}
