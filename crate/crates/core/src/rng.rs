//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha20 (`rand_chacha`) keyed
//! by `rand_core`'s `seed_from_u64(seed)`, with the 64-bit ChaCha stream id
//! selecting an independent substream (one per network node, one per EM
//! restart). Output is identical on every platform and does not depend on
//! the order in which substreams are consumed. The generator is part of the
//! reproducibility contract and must not change silently.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// One independent substream of a seeded generator.
pub struct Stream(ChaCha20Rng);

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Stream(rng)
    }

    /// Uniform draw on `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw on `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}
