//! Deterministic seed derivation.
//!
//! Every random stream in a run descends from one master seed. A child seed is
//! a pure function of `(master, stream, index)`, so drawing sample `i + 1`
//! never perturbs sample `i`, and growing a batch only appends new scenarios.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags. Distinct tags give statistically independent families of seeds.
pub mod stream {
    pub const SCENARIO: u64 = 0x5343_454e; // "SCEN"
    pub const EVALUATION: u64 = 0x4556_414c; // "EVAL"
    pub const WINDROSE: u64 = 0x524f_5345; // "ROSE"
    pub const BENCHMARK: u64 = 0x4245_4e43; // "BENC"
    pub const SYNTHETIC: u64 = 0x5359_4e54; // "SYNT"
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based child seed: `mix(mix(mix(master) ^ stream) ^ index)`.
pub fn child_seed(master: u64, stream: u64, index: u64) -> u64 {
    mix64(mix64(mix64(master) ^ stream) ^ index)
}

/// Generator for one child stream.
pub fn child_rng(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(master, stream, index))
}

/// Maps a unit-interval seed variable `r ∈ [0, 1]` to a 64-bit generator seed
/// by scaling with 2^64 and truncating; `r = 1` saturates to `u64::MAX`.
pub fn unit_to_seed(r: f64) -> u64 {
    let r = r.clamp(0.0, 1.0);
    let scaled = r * 18_446_744_073_709_551_616.0;
    if scaled >= 18_446_744_073_709_551_615.0 {
        u64::MAX
    } else {
        scaled as u64
    }
}
