//! Seeded random streams.
//!
//! Every stochastic routine takes a `u64` seed. Independent pieces of work
//! (Monte Carlo draws, experiment replicates) get their own stream derived
//! from the master seed and a tag, so results do not depend on the order in
//! which the pieces are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer; used to spread tags into well-separated seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `tag` under `seed`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Generator for the `stream`-th independent substream of `seed`.
pub fn substream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Named stream tags used by the experiment harness.
pub mod tags {
    pub const SAMPLE: u64 = 1;
    pub const COMPLEXITY: u64 = 2;
    pub const REPLICATE: u64 = 3;
    pub const LEVY: u64 = 4;
}
