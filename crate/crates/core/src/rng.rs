//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by
//! the run's master seed. Independent consumers (a training batch, an
//! evaluation category, a scorer) get their own stream id, so results do
//! not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Top byte of the stream id; keeps consumers from sharing streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Domain {
    Training = 1,
    Evaluation = 2,
    Scoring = 3,
    Synthetic = 4,
}

pub fn substream(seed: u64, domain: Domain, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 56) ^ (index & ((1 << 56) - 1)));
    rng
}
