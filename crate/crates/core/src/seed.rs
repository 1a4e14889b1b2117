//! Deterministic sub-stream derivation. Every random stage of an experiment
//! gets an independent generator keyed by (master seed, stage name, index),
//! so results do not depend on evaluation order or thread scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

pub fn derive_key(master: u64, stage: &str, index: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update([stage.len() as u8]);
    hasher.update(stage.as_bytes());
    hasher.update(index.to_le_bytes());
    hasher.finalize().into()
}

pub fn derive_rng(master: u64, stage: &str, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::from_seed(derive_key(master, stage, index))
}

/// A 64-bit sub-seed, for stages that themselves derive further streams.
pub fn derive_seed(master: u64, stage: &str, index: u64) -> u64 {
    let key = derive_key(master, stage, index);
    u64::from_le_bytes(key[..8].try_into().unwrap())
}
