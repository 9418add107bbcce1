//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! 64-bit seed and a stream id, so concurrent workers never share state and a
//! given (seed, stream) pair always reproduces the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream used for matrix entries.
pub const STREAM_ENTRIES: u64 = 0;
/// Stream used for the Gaussian component of an OU interpolation.
pub const STREAM_OU: u64 = 1;
/// Stream used for Brownian increments of eigenvalue flows.
pub const STREAM_FLOW: u64 = 2;
/// Stream used by test-function and initial-condition generators.
pub const STREAM_AUX: u64 = 3;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator for worker `worker` of a sweep keyed by `seed`.
pub fn worker_rng(seed: u64, worker: u64) -> ChaCha8Rng {
    stream_rng(seed, STREAM_AUX.wrapping_add(1).wrapping_add(worker))
}
