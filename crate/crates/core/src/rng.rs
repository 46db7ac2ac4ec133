//! Seeded random streams.
//!
//! Every Monte Carlo task owns a ChaCha stream addressed by `(seed, stream)`,
//! so a task's draws depend only on its index and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A generator for stream `stream` of the key `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mix `(seed, index)` into a fresh 64-bit key (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
