//! Seed derivation for reproducible parallel sampling.
//!
//! Every unit of work (a disorder replica, a descent start, a quadrature node)
//! draws from its own stream derived from `(master seed, path of indices)`, so
//! results do not depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedStream(u64);

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream(seed)
    }

    pub fn seed(self) -> u64 {
        self.0
    }

    /// Independent sub-stream number `index`.
    pub fn child(self, index: u64) -> Self {
        SeedStream(splitmix64(self.0 ^ splitmix64(index.wrapping_add(0xA076_1D64_78BD_642F))))
    }

    /// Sub-stream keyed by a name, for separating the roles of one seed.
    pub fn named(self, label: &str) -> Self {
        // FNV-1a
        let h = label
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
        self.child(h)
    }

    pub fn rng(self) -> Rng {
        Rng::seed_from_u64(self.0)
    }
}
