//! Counter-keyed random streams.
//!
//! Every random decision is read from a ChaCha stream addressed by a domain
//! tag, an iteration index and a block position, so outcomes do not depend
//! on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const DOMAIN_ACTIVATION: u64 = 1;
pub(crate) const DOMAIN_COIN: u64 = 2;
pub(crate) const DOMAIN_FINISH: u64 = 3;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for a retry or sub-task, derived from the master seed and labels.
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(mix64(seed), |acc, &l| mix64(acc ^ mix64(l)))
}

/// Base generator for `(domain, index)`; position it with [`at_block`].
pub(crate) fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain << 48) | (index & 0xffff_ffff_ffff));
    rng
}

/// Moves to the start of 64-byte block `block` (each block holds 16 words).
pub(crate) fn at_block(rng: &mut ChaCha8Rng, block: u64) {
    rng.set_word_pos((block as u128) << 4);
}
