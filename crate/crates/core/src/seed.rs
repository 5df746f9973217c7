// SPDX-License-Identifier: MIT OR Apache-2.0

//! Deterministic derivation of independent RNG streams.
//!
//! Every random quantity in the crate is drawn from a [`ChaCha8Rng`] whose
//! seed is derived from a master seed and a path of integers (replication
//! index, purpose tag, replicate number ...). Streams therefore never depend
//! on the order in which work is executed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags mixed into derived seeds.
pub mod purpose {
    pub const DESIGN: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const FOLDS: u64 = 3;
    pub const PERMUTATION: u64 = 4;
    pub const RIC_SAMPLE: u64 = 5;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `path` into `master`, one component at a time.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &part| {
        splitmix64(acc ^ splitmix64(part))
    })
}

pub fn rng_for(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}
