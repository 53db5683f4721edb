//! Seed derivation.
//!
//! Every random stream is keyed by a path of counters below a master seed,
//! e.g. `[trial, stage]` or `[draw]`. Each path element is folded into the
//! state with a SplitMix64 finalizer, and the result seeds a ChaCha8 stream.
//! Parallel and serial runs therefore see identical streams on any machine.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `path` under `master`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

pub fn stream(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}

/// Rademacher signs σ ∈ {-1, +1}ⁿ for draw `draw` of the estimate seeded by `seed`.
pub fn rademacher_signs(seed: u64, draw: u64, n: usize) -> Vec<f64> {
    let mut rng = stream(seed, &[draw]);
    (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}
