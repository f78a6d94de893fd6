//! Deterministic seed derivation.
//!
//! Every randomized choice in the pipeline draws from a ChaCha stream keyed
//! by the run seed plus a string key, so results do not depend on call order
//! or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Mixes a run seed with a key into a new 64-bit seed (FNV-1a over the key,
/// salted with the seed bytes).
pub fn derive(seed: u64, key: &str) -> u64 {
    let mut hash = FNV_OFFSET;
    for byte in seed.to_le_bytes().iter().chain(key.as_bytes()) {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

pub fn rng_for(seed: u64, key: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, key))
}
