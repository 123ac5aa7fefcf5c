//! Deterministic seed derivation.
//!
//! Every random procedure in this crate takes a `u64` seed and derives child
//! seeds for its internal streams (graph drawing, parameter drawing, event
//! generation, per-cell repeats) through [`split`]. The derivation is a pure
//! function, so a run is reproducible from its root seed alone regardless of
//! thread count or evaluation order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tag for DAG sampling.
pub const STREAM_DAG: u64 = 1;
/// Stream tag for parameter sampling.
pub const STREAM_PARAMS: u64 = 2;
/// Stream tag for event generation.
pub const STREAM_EVENTS: u64 = 3;
/// Stream tag for per-trial substreams in experiments.
pub const STREAM_TRIAL: u64 = 4;

/// splitmix64 finalizer (Steele, Lea, Flood 2014). Bijective on u64.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` for the stream identified by `tag`.
pub fn split(seed: u64, tag: u64) -> u64 {
    mix64(seed ^ mix64(tag))
}

/// Two-level derivation, for indexed substreams (trial `i` of stream `tag`).
pub fn split2(seed: u64, tag: u64, index: u64) -> u64 {
    split(split(seed, tag), index)
}

/// The RNG used throughout the crate, constructed from a derived seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
