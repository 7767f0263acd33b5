//! Seed derivation and the generator used by every stochastic operation.
//!
//! All randomness flows from explicit `u64` seeds. Sub-streams (per trial,
//! per stage, per population sample) are derived by hashing the parent seed
//! with an index and a stage tag, so the output of a run never depends on the
//! order in which work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type DetRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> DetRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn tag_hash(tag: &str) -> u64 {
    // FNV-1a
    tag.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Derive an independent seed from `(master, index, tag)`.
pub fn derive_seed(master: u64, index: u64, tag: &str) -> u64 {
    mix64(mix64(master ^ tag_hash(tag)).wrapping_add(mix64(index.wrapping_add(0x5851_F42D_4C95_7F2D))))
}
