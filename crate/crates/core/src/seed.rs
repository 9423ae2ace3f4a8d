//! Named seed derivation.
//!
//! Every random stream in the pipeline is derived from one root seed plus a
//! component path, so adding a stream (or a worker) never shifts another one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

/// Derives a 64-bit subseed for `name` under `root`.
pub fn derive(root: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(name.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("sha256 has 32 bytes"))
}

/// Generator for the stream `name` under `root`.
pub fn rng(root: u64, name: &str) -> Rng {
    ChaCha8Rng::seed_from_u64(derive(root, name))
}
