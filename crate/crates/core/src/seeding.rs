//! Stable seed derivation for experiment runs.
//!
//! A run seed is the first eight bytes (little endian) of
//! `SHA-256("tbpdc-run-v1:{master}:{setup}:{k}:{algorithm}:{rep}")`.
//! The instance seed uses the same recipe without the algorithm
//! (`"tbpdc-instance-v1:{master}:{setup}:{k}:{rep}"`) so every algorithm of a
//! repetition faces the same random instance.
//!
//! Each seed drives a ChaCha8 generator; independent sub-streams of the
//! same key are selected with [`Stream`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Sub-streams of one run seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Instance = 0,
    Oracle = 1,
    Algorithm = 2,
}

fn hash_to_u64(text: &str) -> u64 {
    let digest = Sha256::digest(text.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn run_seed(master: u64, setup: &str, k: usize, algorithm: &str, rep: usize) -> u64 {
    hash_to_u64(&format!("tbpdc-run-v1:{master}:{setup}:{k}:{algorithm}:{rep}"))
}

pub fn instance_seed(master: u64, setup: &str, k: usize, rep: usize) -> u64 {
    hash_to_u64(&format!("tbpdc-instance-v1:{master}:{setup}:{k}:{rep}"))
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
