//! Deterministic seed derivation.
//!
//! Every randomized component draws its own ChaCha stream from
//! `(master seed, stream tag, index)`, so results do not depend on thread
//! scheduling or evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub mod stream {
    pub const TRIAL_X: u64 = 0x01;
    pub const TRIAL_Y: u64 = 0x02;
    pub const TRIAL_TEST: u64 = 0x03;
    pub const PERMUTATION: u64 = 0x04;
    pub const PAIRING: u64 = 0x05;
    pub const EQUALIZE: u64 = 0x06;
    pub const COMPARISON: u64 = 0x07;
    pub const REST_GROUP: u64 = 0x08;
    pub const PROBE: u64 = 0x09;
    pub const SUBSAMPLE: u64 = 0x0a;
    pub const RUN: u64 = 0x0b;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream ^ splitmix64(index)))
}

pub fn rng_from(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, index))
}
