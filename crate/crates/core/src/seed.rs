//! Counter-based seed derivation.
//!
//! Every random quantity in a run is drawn from a stream whose seed is a
//! hash of a master seed and a path of integer labels (experiment cell,
//! replica, role, tree path). No stream is ever shared between tasks, so
//! results do not depend on scheduling.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// Random stream used throughout the crate.
pub type StreamRng = Xoshiro256PlusPlus;

/// A 64-bit seed that can be split deterministically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Seed(pub u64);

/// Labels for the independent streams used inside a replica.
pub mod role {
    pub const TREE: u64 = 0x5452_4545;
    pub const PRIORITY: u64 = 0x5052_494f;
    pub const INVASIVE: u64 = 0x494e_5641;
    pub const NONINVASIVE: u64 = 0x4e4f_4e49;
    pub const OFFSPRING: u64 = 0x4f46_4653;
    pub const STEP: u64 = 0x5354_4550;
    pub const THINNING: u64 = 0x5448_494e;
    pub const SEEDING: u64 = 0x5345_4544;
}

#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Seed {
    /// Child seed for `label`. Distinct labels give unrelated streams.
    #[inline]
    pub fn derive(self, label: u64) -> Seed {
        Seed(mix64(
            self.0.wrapping_add(0x9e37_79b9_7f4a_7c15).rotate_left(17) ^ mix64(label.wrapping_add(0x632b_e59b_d9b4_e019)),
        ))
    }

    /// Seed for replica `replica` of experiment cell `cell`.
    pub fn replica(master: u64, cell: u64, replica: u64) -> Seed {
        Seed(master).derive(cell).derive(replica)
    }

    pub fn rng(self) -> StreamRng {
        StreamRng::seed_from_u64(self.0)
    }

    /// Uniform variate in [0, 1) read directly off the seed bits.
    #[inline]
    pub fn unit(self) -> f64 {
        (mix64(self.0) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
