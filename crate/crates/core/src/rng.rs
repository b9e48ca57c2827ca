//! Seed derivation for reproducible parallel randomness.
//!
//! Every random stream in the crate is a [`rand_chacha::ChaCha8Rng`] seeded
//! from a value derived with [`derive_seed`].  Work units (sampling batches,
//! IK restarts, per-candidate evaluations) get their own derived stream, so
//! results do not depend on how work is scheduled across threads, and
//! enlarging a budget extends the stream sequence instead of reshuffling it.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags keep seeds derived for different purposes from colliding even
/// when their indices coincide.
pub mod stream {
    /// Forward-kinematics sampling batches.
    pub const FK_BATCH: u64 = 0x01;
    /// IK refinement, one stream per target point.
    pub const IK_POINT: u64 = 0x02;
    /// Random restarts inside one IK solve.
    pub const IK_RESTART: u64 = 0x03;
    /// Per-candidate evaluation streams inside an optimizer run.
    pub const OPT_EVAL: u64 = 0x04;
    /// Initial population generation.
    pub const OPT_INIT: u64 = 0x05;
    /// New-generation sampling (model sampling / GA variation).
    pub const OPT_GEN: u64 = 0x06;
    /// Minimum-torque solves, one stream per target point.
    pub const TORQUE_POINT: u64 = 0x07;
}

/// SplitMix64 finalizer: a cheap, well-mixed 64-bit permutation.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a base seed, a stream tag and an index.
///
/// The mapping is injective enough in practice (full-period 64-bit mixing)
/// and, crucially, pure: the same `(base, tag, index)` always yields the same
/// child, independent of call order or thread.
pub fn derive_seed(base: u64, tag: u64, index: u64) -> u64 {
    mix(mix(base ^ mix(tag)) ^ index)
}

/// A ChaCha8 stream for the given derived seed.
pub fn stream_rng(base: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tag, index))
}
