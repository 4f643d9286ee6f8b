//! Counter-based random streams.
//!
//! A draw is addressed by `(seed, stream, word)`: the seed selects a ChaCha8
//! key, the stream index selects the ChaCha stream and the word index is the
//! position within it. Any sample can be regenerated on its own, and workers
//! need no coordination beyond owning disjoint stream indices.

use fixedbitset::FixedBitSet;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct StreamSource {
    seed: u64,
    key: <ChaCha8Rng as SeedableRng>::Seed,
}

impl StreamSource {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut key);
        StreamSource { seed, key }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator positioned at word 0 of `stream`.
    pub fn stream(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(stream);
        rng
    }

    /// Fills the first `bits.len()` bits of `bits` with fair coin flips from `stream`.
    pub fn fill_bits(&self, stream: u64, bits: &mut FixedBitSet) {
        let len = bits.len();
        let mut rng = self.stream(stream);
        let blocks = bits.as_mut_slice();
        for b in blocks.iter_mut() {
            *b = rng.next_u64() as usize;
        }
        let rem = len % usize::BITS as usize;
        if rem != 0 {
            if let Some(last) = blocks.last_mut() {
                *last &= (1usize << rem) - 1;
            }
        }
    }
}

/// Address of one configuration draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub stream: u64,
}
