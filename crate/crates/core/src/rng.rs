//! Seed derivation. Every random stream in the crate descends from one
//! 64-bit seed through a counter-based splitter, so any sub-computation can
//! be replayed without replaying its siblings.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A node in the seed tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedTree(u64);

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        SeedTree(seed)
    }

    pub fn seed(self) -> u64 {
        self.0
    }

    /// The `index`-th child stream.
    pub fn child(self, index: u64) -> SeedTree {
        SeedTree(splitmix64(self.0 ^ splitmix64(index.wrapping_add(0xA076_1D64_78BD_642F))))
    }

    /// Child keyed by a label (FNV-1a of the bytes).
    pub fn named(self, label: &str) -> SeedTree {
        let h = label
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
        self.child(h)
    }

    pub fn rng(self) -> Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}
