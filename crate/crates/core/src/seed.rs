//! Counter-based seed derivation.
//!
//! Every random stream in an experiment is keyed by `(master, trial, purpose)`
//! so results do not depend on the order in which trials are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a 64-bit seed for `(master, trial, purpose)`.
pub fn derive_seed(master: u64, trial: u64, purpose: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ trial) ^ purpose.rotate_left(17))
}

pub fn rng_from_seed(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn trial_rng(master: u64, trial: u64, purpose: u64) -> TrialRng {
    rng_from_seed(derive_seed(master, trial, purpose))
}
