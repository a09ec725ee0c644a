//! Keyed random substreams.
//!
//! Every random draw in the workspace comes from a ChaCha stream whose seed
//! is a hash of a key path such as `(master seed, tag, instance, neighbor)`.
//! Draws therefore depend only on their key and never on the order in which
//! work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags that keep substreams for different purposes apart.
pub mod tag {
    pub const NEIGHBOR: u64 = 0x6e65_6967;
    pub const BOOTSTRAP: u64 = 0x626f_6f74;
    pub const SPLIT: u64 = 0x7370_6c74;
    pub const SMOTE: u64 = 0x736d_6f74;
    pub const MODEL: u64 = 0x6d6f_646c;
    pub const BACKGROUND: u64 = 0x6267_7264;
    pub const SAMPLE: u64 = 0x7361_6d70;
    pub const SURROGATE: u64 = 0x6c69_6d65;
    pub const REPLICATE: u64 = 0x7265_706c;
    pub const SYNTH: u64 = 0x7379_6e74;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a key path into a single 64-bit seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x243f_6a88_85a3_08d3, |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

pub fn substream(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(parts))
}
