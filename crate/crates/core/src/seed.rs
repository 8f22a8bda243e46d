//! Deterministic derivation of independent rng streams.
//!
//! Every task (a device calibration, a dataset cell, a Monte-Carlo
//! iteration) owns its own stream derived from a base seed plus a tag path.
//! Results therefore never depend on scheduling or iteration order, and a
//! run is reproducible from the base seed alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derives an independent ChaCha stream from `base` and a tag path.
pub fn derive_rng(base: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(derive_seed_bytes(base, tags))
}

/// 32-byte seed material for `base` plus a tag path.
pub fn derive_seed_bytes(base: u64, tags: &[u64]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(base.to_be_bytes());
    for t in tags {
        h.update(t.to_be_bytes());
    }
    let d = h.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&d);
    seed
}
