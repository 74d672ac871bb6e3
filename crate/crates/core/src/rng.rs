//! Deterministic random substreams.
//!
//! Every random draw in the simulator comes from a ChaCha8 stream keyed by
//! `(seed, a, b)` (for collisions: step index and candidate index), so the
//! same key always reproduces the same numbers regardless of thread count or
//! of the particle states they are applied to.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a seed with two stream coordinates into a 64-bit key.
pub fn stream_key(seed: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b.rotate_left(17))
}

/// Independent generator for the stream `(seed, a, b)`.
pub fn substream(seed: u64, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_key(seed, a, b))
}
