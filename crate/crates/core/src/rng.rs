//! Seed derivation.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] seeded with
//! `derive_seed(root, stream)`. Streams are fixed integers, so adding a new
//! consumer never shifts the numbers an existing consumer sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Streams used by [`crate::reservoir::init_reservoir`].
pub mod stream {
    pub const W_IN: u64 = 1;
    pub const BIAS: u64 = 2;
    /// Recurrent weights use `W_STAR + attempt` so a degenerate draw can be retried.
    pub const W_STAR: u64 = 1000;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(root: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(root) ^ splitmix64(stream.wrapping_mul(0xD6E8_FEB8_6659_FD93)))
}

pub fn rng_for(root: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, stream))
}
