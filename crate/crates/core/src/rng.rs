//! Seed plumbing. A master seed expands into independent child seeds through
//! a counter-based splitter, so trial `k` of a run never depends on how many
//! threads produced trials `0..k`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer applied to `master + (counter+1)·golden`.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    let mut z = master.wrapping_add(counter.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for a given seed; `stream` selects an independent ChaCha stream.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fixed purposes so that e.g. the message and the noise of one trial never
/// share a stream.
pub mod purpose {
    pub const MATRIX: u64 = 1;
    pub const MESSAGE: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const SIGNS: u64 = 4;
    pub const ROWS: u64 = 5;
    pub const MONTE_CARLO: u64 = 6;
    pub const HAAR_LEFT: u64 = 7;
    pub const HAAR_RIGHT: u64 = 8;
    pub const PERMUTATION: u64 = 9;
}
