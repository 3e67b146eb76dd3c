//! Deterministic random substreams.
//!
//! Every draw in the library comes from a ChaCha8 generator keyed by
//! `(seed, purpose, index)`. Streams for different purposes or indices are
//! independent, so any loop can run in parallel and still produce output
//! that is bitwise identical to the sequential run.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream namespaces. Each randomized stage owns one tag so that, e.g.,
/// pseudo-noise draws can never collide with bootstrap draws under the
/// same user seed.
#[derive(Clone, Copy, Debug)]
#[repr(u64)]
pub enum Purpose {
    /// Per-SNP pseudo-noise for rerandomized selection, indexed by SNP position.
    Select = 1,
    /// Per-replicate multinomial bootstrap weights, indexed by replicate.
    Bootstrap = 2,
    /// Initial values for the coordinate-descent restarts, indexed by (v, restart).
    RestartInit = 3,
    /// Simulated datasets, indexed by repetition.
    Dataset = 4,
    /// Per-repetition estimator seeds inside the simulation harness.
    Estimator = 5,
}

/// A ChaCha8 stream keyed by `(seed, purpose, index)`.
pub fn substream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Derives a child seed for a nested stage (SplitMix64 finalizer over the
/// combined words).
pub fn derive_seed(seed: u64, purpose: Purpose, index: u64) -> u64 {
    let mut x = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(purpose as u64)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
