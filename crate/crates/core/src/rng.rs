//! Seed handling. Every random choice in the crate flows from a 64-bit master
//! seed through [`split_seed`] into a ChaCha8 stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of stream `counter` from `master`:
/// `splitmix64(master ^ splitmix64(counter))`.
pub fn split_seed(master: u64, counter: u64) -> u64 {
    splitmix64(master ^ splitmix64(counter))
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `counter` of `master`.
pub fn sub_rng(master: u64, counter: u64) -> ChaCha8Rng {
    rng_from(split_seed(master, counter))
}
