//! Deterministic seed derivation.
//!
//! Every randomized component receives its own `u64` seed derived from a master
//! seed and a path of integer labels, so that runs, replicas and evaluation
//! draws are independent and reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and a label path.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(master.wrapping_add(GOLDEN_GAMMA)), |acc, &label| {
        mix(acc ^ mix(label.wrapping_add(GOLDEN_GAMMA)).rotate_left(17))
    })
}

/// Seeds a ChaCha8 generator from a derived seed.
pub fn rng(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, path))
}

/// Stable 64-bit fingerprint of a slice of reals (bit-exact).
pub fn fingerprint(values: &[f64]) -> u64 {
    values
        .iter()
        .fold(mix(values.len() as u64), |acc, v| mix(acc ^ v.to_bits()).rotate_left(5))
}
