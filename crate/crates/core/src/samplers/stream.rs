//! Reproducible per-replica random streams.
//!
//! One master seed fans out to independent streams via the ChaCha stream
//! counter, so replica `i` draws the same numbers no matter how work is
//! distributed across threads or runs.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Factory of statistically independent, reproducible RNGs.
#[derive(Debug, Clone, Copy)]
pub struct ReplicaStreams {
    seed: u64,
}

impl ReplicaStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// RNG for one replica; identical `(seed, replica)` pairs always yield
    /// identical streams.
    pub fn replica(&self, replica: u64) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(replica);
        rng
    }
}
