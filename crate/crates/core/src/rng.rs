//! Named random streams split from one root seed per run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent consumers of randomness within one run. Agents never draw
/// from these, so changing the agent leaves the environment's draws intact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Environment,
    Observation,
    Oracle,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Environment => 1,
            Stream::Observation => 2,
            Stream::Oracle => 3,
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}
