//! Seed derivation for reproducible, order-independent replicas.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random source used by every simulation path.
pub type SimRng = ChaCha8Rng;

/// Mixes a master seed with a task index (SplitMix64 finalizer applied to both).
/// Replica `i` of a task always receives the same stream no matter which worker
/// runs it or in what order.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = mix(master) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = mix(z.wrapping_add(0x9E37_79B9_7F4A_7C15));
    z
}

/// Folds a sequence of indices into a seed.
pub fn derive_seed_path(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(master, |s, &i| derive_seed(s, i))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
