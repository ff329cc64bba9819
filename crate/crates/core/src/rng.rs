//! Seed derivation for named random sub-streams.
//!
//! Every random decision in a run is drawn from a generator seeded by
//! `(root seed, stream name, index)`. Two components that use different
//! stream names never share state, and a particle's draws depend only on its
//! index, so results do not depend on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const STREAM_PRIOR: &str = "prior";
pub const STREAM_ASSIGN: &str = "assign";
pub const STREAM_SYNTH: &str = "synth";
pub const STREAM_FOLDS: &str = "folds";
pub const STREAM_POSTERIOR: &str = "posterior";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Mixes a root seed, a stream name and an index into a 64-bit seed.
pub fn derive_seed(root: u64, stream: &str, index: u64) -> u64 {
    let a = splitmix64(root ^ fnv1a(stream));
    splitmix64(a ^ splitmix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}

pub fn stream_rng(root: u64, stream: &str, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(root, stream, index))
}
