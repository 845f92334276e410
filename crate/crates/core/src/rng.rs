//! Counter-based random streams.
//!
//! Every random quantity in a simulation is a pure function of a 64-bit key
//! and a counter, so epochs can be synthesized in any order on any thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child key from a parent key and a label.
pub fn derive(key: u64, label: u64) -> u64 {
    mix64(key ^ mix64(label))
}

/// Uniform random sign for `(key, index)`.
pub fn sign_at(key: u64, index: u64) -> i8 {
    if derive(key, index) >> 63 == 0 {
        1
    } else {
        -1
    }
}

/// Independent ChaCha stream for `(key, index)`.
pub fn stream(key: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}
