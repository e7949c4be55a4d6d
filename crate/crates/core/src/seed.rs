//! Seed splitting.
//!
//! Every random stream in an experiment is derived from one master seed by
//! hashing `(parent, tag, index)` with SHA-256 and taking the first eight
//! bytes little-endian. Distinct tags or indices give unrelated streams, so
//! no two cells of a suite share randomness unless they are meant to (the
//! initial design of a replication, for instance).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The random generator used throughout. ChaCha is portable across platforms,
/// which keeps artifacts byte-identical everywhere.
pub type Rng = ChaCha8Rng;

pub fn derive_seed(parent: u64, tag: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(parent.to_le_bytes());
    hasher.update((tag.len() as u64).to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derive_rng(parent: u64, tag: &str, index: u64) -> Rng {
    rng_from_seed(derive_seed(parent, tag, index))
}
