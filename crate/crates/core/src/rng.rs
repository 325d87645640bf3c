//! Seedable, portable random streams.
//!
//! Every stochastic routine in the crate draws from [`AspectRng`], which is
//! ChaCha with 8 rounds (`rand_chacha::ChaCha8Rng`). Seeds are expanded from a
//! `u64` through `SeedableRng::seed_from_u64`, so a given seed produces the
//! same stream on every platform.

use rand::SeedableRng;

pub type AspectRng = rand_chacha::ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> AspectRng {
    AspectRng::seed_from_u64(seed)
}

/// Mix a base seed with a stream index into an independent child seed
/// (SplitMix64 finalizer over the combined value).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
