//! Counter-based seed derivation.
//!
//! Every random stream in an experiment is seeded with
//! `derive(master, stream, index)`: the three values are mixed through
//! SplitMix64 finalizers, so streams for different `(stream, index)` pairs are
//! independent and a run is fully determined by the master seed.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Network initialization; shared by both optimizers for a given ensemble member.
    Init = 1,
    /// Mini-batch order of one SGD run.
    SgdShuffle = 2,
    /// Per-epoch permutation inside a [`crate::data::BatchPlan`].
    Shuffle = 3,
    PairSampling = 4,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(master: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream as u64) ^ index)
}
