//! Keyed random streams.
//!
//! A [`RandomSource`] names a ChaCha8 stream by `(seed, stream_id)`. The
//! generator is counter based, so a stream's output depends only on its key
//! and never on which worker consumes it or in what order.

use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream namespaces used by the simulation engine.
pub mod purpose {
    pub const NULL: u64 = 0x6e75_6c6c;
    pub const ALTERNATIVE: u64 = 0x0061_6c74;
    pub const DECISION: u64 = 0x6465_6369;
    pub const LEVEL: u64 = 0x006c_6576;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RandomSource {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RandomSource {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        RandomSource { seed, stream_id }
    }

    /// The generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut state = self.seed;
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_id);
        rng
    }

    /// A fresh family of streams derived from this one, e.g. one per
    /// purpose of a study.
    pub fn derive(&self, tag: u64) -> RandomSource {
        RandomSource {
            seed: splitmix64(splitmix64(self.seed ^ splitmix64(self.stream_id)) ^ tag),
            stream_id: 0,
        }
    }

    /// Stream for replication `index` within this source's family.
    pub fn replication(&self, index: u64) -> RandomSource {
        RandomSource {
            seed: splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_add(0x5851_f42d))),
            stream_id: index,
        }
    }
}

/// Uniform draw on the open interval (0, 1).
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Open01.sample(rng)
}
