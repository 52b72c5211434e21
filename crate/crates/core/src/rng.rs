//! Seed derivation.
//!
//! Every random decision in a run draws from a ChaCha stream whose seed is a
//! pure function of the run seed and a small key (round, client, copy, ...),
//! so work may be scheduled on any thread without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream domains, kept distinct so that e.g. selection and local training
/// in the same round never share a seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Task = 1,
    Selection = 2,
    Local = 3,
    Availability = 4,
    Skew = 5,
    Grid = 6,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with a domain tag and an arbitrary key path.
pub fn derive_seed(seed: u64, domain: Domain, key: &[u64]) -> u64 {
    let mut h = splitmix64(seed ^ splitmix64(domain as u64));
    for &k in key {
        h = splitmix64(h ^ splitmix64(k.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    h
}

pub fn stream(seed: u64, domain: Domain, key: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, domain, key))
}
