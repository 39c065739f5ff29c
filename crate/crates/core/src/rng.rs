//! Seeded random streams.
//!
//! Every run derives all of its randomness from one `u64` seed. Components
//! draw from separate ChaCha streams so that adding draws in one component
//! does not shift the numbers seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Named sub-stream of a run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Initial user placement and stochastic line-of-sight draws.
    Env,
    /// Ground-user motion.
    Users,
    /// Network initialization and replay sampling.
    Agent,
    /// Exploration noise.
    Noise,
    /// Baseline policies.
    Baseline,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Env => 1,
            Stream::Users => 2,
            Stream::Agent => 3,
            Stream::Noise => 4,
            Stream::Baseline => 5,
        }
    }
}

/// Returns the generator for `stream` under `seed`.
pub fn stream(seed: u64, stream: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}

/// Derives a child seed, e.g. one per episode, from a parent seed.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
