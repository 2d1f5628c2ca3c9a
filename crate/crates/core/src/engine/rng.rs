//! Seeded random substreams.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit seed derived from
//! `(master_seed, labels...)` by folding each label through the splitmix64
//! finaliser. Derivation is positional, so no stream depends on how many
//! numbers another stream consumed:
//!
//! ```text
//! run seed    = derive(master_seed, [RUN, run_index])
//! agent draw  = derive(run_seed, [purpose, agent_index])
//! ```
//!
//! Treatments reuse the run seed, which is what keeps agent draws and the
//! fundamental path identical across regulatory regimes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags. Values are part of the reproducibility contract.
pub mod tag {
    pub const RUN: u64 = 0x52554e;
    pub const PARAMS: u64 = 1;
    pub const FUNDAMENTAL: u64 = 2;
    pub const ENTRY: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const DECISION: u64 = 5;
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix64(seed), |acc, &l| splitmix64(acc ^ splitmix64(l)))
}

pub fn run_seed(master_seed: u64, run: usize) -> u64 {
    derive_seed(master_seed, &[tag::RUN, run as u64])
}

pub fn stream(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &[purpose, index]))
}
