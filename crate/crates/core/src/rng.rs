//! Replica-indexed random streams.
//!
//! Every replica of an experiment draws from its own ChaCha8 stream, selected
//! by `replica_index` under a shared `master_seed`. The sequence of draws a
//! replica sees depends only on that pair, never on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    replica_index: u64,
    position: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, replica_index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(replica_index);
        RngStream {
            master_seed,
            replica_index,
            position: 0,
            inner,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn replica_index(&self) -> u64 {
        self.replica_index
    }

    /// Number of logical draws consumed so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    /// One draw: uniform integer in `0..bound`.
    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        self.position += 1;
        self.inner.gen_range(0..bound)
    }

    /// One draw: uniform real in `[0, 1)`.
    #[inline]
    pub fn unit(&mut self) -> f64 {
        self.position += 1;
        self.inner.gen::<f64>()
    }

    /// A fresh stream for a sub-task, derived deterministically from this one.
    pub fn fork(&self, salt: u64) -> RngStream {
        RngStream::new(
            self.master_seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15),
            self.replica_index,
        )
    }
}
