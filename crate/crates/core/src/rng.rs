//! Deterministic parallel random number generation.
//!
//! Work is split into fixed-size chunks; each chunk seeds its own ChaCha12
//! stream from `(master seed, chunk index)` via a SplitMix64 mix. Results
//! are therefore identical no matter how many worker threads run the
//! chunks.

use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;

/// Draws per chunk in parallel loops. Fixed so the chunk decomposition (and
/// hence the output) does not depend on the thread count.
pub const CHUNK_DRAWS: usize = 8192;

/// SplitMix64 output function.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the sub-seed for one chunk of work from the master seed.
pub fn derive_chunk_seed(master: u64, chunk: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(chunk.wrapping_mul(0xA076_1D64_78BD_642F)))
}

/// RNG for one chunk, ready to draw.
pub fn chunk_rng(master: u64, chunk: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_chunk_seed(master, chunk))
}

/// Number of chunks needed for `total` draws.
pub fn chunk_count(total: usize) -> usize {
    total.div_ceil(CHUNK_DRAWS)
}

/// Bounds of chunk `i` within `total` draws.
pub fn chunk_bounds(i: usize, total: usize) -> (usize, usize) {
    let lo = i * CHUNK_DRAWS;
    (lo, ((i + 1) * CHUNK_DRAWS).min(total))
}
