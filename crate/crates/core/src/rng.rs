//! Named random streams derived from a single master seed.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed, with the
//! 64-bit ChaCha stream id packing `(purpose, population, generation)`:
//!
//! ```text
//! stream = purpose << 56 | population << 48 | generation
//! ```
//!
//! Streams never overlap, so consuming one has no effect on any other and
//! results do not depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Initialization = 1,
    Reproduction = 2,
    ParasiteSelection = 3,
    RandomFitness = 4,
    Representatives = 5,
}

pub fn stream(seed: u64, purpose: Purpose, population: u8, generation: u64) -> Rng {
    debug_assert!(generation < 1 << 48);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = (purpose as u64) << 56 | (population as u64) << 48 | (generation & ((1 << 48) - 1));
    rng.set_stream(id);
    rng
}

/// Generator for ad-hoc use (tests, single genomes) from a plain seed.
pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
