//! Deterministic random streams keyed by `(seed, round, node)`, so results do
//! not depend on which worker runs which node.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes the key into a single 64-bit seed.
pub fn derive_seed(seed: u64, round: u64, node: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ round) ^ node)
}

pub fn stream_rng(seed: u64, round: usize, node: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, round as u64, node as u64))
}
