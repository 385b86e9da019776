//! Deterministic seed derivation for parallel Monte Carlo.
//!
//! Every trial owns a generator seeded from
//! `(master seed, experiment id, grid index, trial index)` through a fixed
//! splitmix64 chain, so results are independent of worker count and
//! scheduling order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 step (Steele, Lea & Flood constants). Stable across
/// platforms and releases; the output stream is part of the
/// reproducibility contract.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a 64-bit trial seed from the experiment coordinates.
pub fn derive_seed(master: u64, experiment_id: u64, grid_index: u64, trial_index: u64) -> u64 {
    let mut s = splitmix64(master);
    s = splitmix64(s ^ experiment_id);
    s = splitmix64(s ^ grid_index);
    s = splitmix64(s ^ trial_index);
    s
}

/// Generator for one trial.
pub fn trial_rng(master: u64, experiment_id: u64, grid_index: u64, trial_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, experiment_id, grid_index, trial_index))
}

/// Generator from a bare seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
