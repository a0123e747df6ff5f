//! Seed fan-out: one master seed feeds named sub-streams so that, e.g.,
//! changing the repeat index only perturbs run-level randomness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type RunRng = ChaCha8Rng;

/// Derives a sub-seed from `master` and a label such as `"init/run2"`.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng_from_seed(seed: u64) -> RunRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn labeled_rng(master: u64, label: &str) -> RunRng {
    rng_from_seed(derive_seed(master, label))
}
