//! Seeded random streams.
//!
//! Every stochastic routine draws from ChaCha20 keyed by a 64-bit seed. Work
//! that is split into chunks uses one ChaCha stream per chunk index so results
//! do not depend on how chunks are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

pub const GENERATOR_NAME: &str = "chacha20";

pub fn seeded(seed: u64) -> StreamRng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn substream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
