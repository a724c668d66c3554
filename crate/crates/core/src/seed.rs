//! Seed derivation helpers.
//!
//! Every random stream in the crate is a ChaCha8 generator seeded from a
//! 64-bit value derived with [`mix`], so that sub-computations (matches,
//! episodes, runs) can be seeded independently of execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finaliser.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a stream index.
#[inline]
pub fn mix(parent: u64, index: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Derives a child seed from a parent seed and several indices.
pub fn mix_all(parent: u64, indices: &[u64]) -> u64 {
    indices.iter().fold(parent, |acc, &i| mix(acc, i))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Domain tags, so that streams used for different purposes never collide.
pub mod tag {
    pub const MATCH: u64 = 0x6d61_7463;
    pub const SHUFFLE: u64 = 0x7368_7566;
    pub const EPISODE: u64 = 0x6570_6973;
    pub const REWARD: u64 = 0x7277_6172;
    pub const BATCH: u64 = 0x6261_7463;
    pub const INIT: u64 = 0x696e_6974;
    pub const EVAL: u64 = 0x6576_616c;
    pub const RUN: u64 = 0x7275_6e73;
    pub const FITNESS: u64 = 0x6669_746e;
    pub const DATASET: u64 = 0x6461_7461;
    pub const CHAIN: u64 = 0x6368_6169;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_separates_streams() {
        assert_ne!(mix(1, 0), mix(1, 1));
        assert_ne!(mix(1, 0), mix(2, 0));
        assert_eq!(mix_all(9, &[1, 2]), mix(mix(9, 1), 2));
    }
}
