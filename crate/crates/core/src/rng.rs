//! Seedable, splittable random streams.
//!
//! Every stochastic routine takes an [`ArRng`] (or a seed from which one is
//! built). Independent work items derive child streams with [`ArRng::split`],
//! so results never depend on scheduling or thread count.

use rand::{Error, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a stream index.
pub fn derive_seed(parent: u64, stream: u64) -> u64 {
    mix64(mix64(parent) ^ mix64(stream.wrapping_add(0xA076_1D64_78BD_642F)))
}

#[derive(Clone, Debug)]
pub struct ArRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl ArRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Seed this stream was built from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream `stream` of this generator's seed. Splitting
    /// does not consume state from `self`.
    pub fn split(&self, stream: u64) -> ArRng {
        ArRng::new(derive_seed(self.seed, stream))
    }
}

impl RngCore for ArRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), Error> {
        self.inner.try_fill_bytes(dest)
    }
}
