//! Deterministic RNG stream derivation.
//!
//! Every randomized stage derives its own stream from the experiment seed, a
//! stage label, and an optional per-item salt (usually a node id). Streams are
//! therefore independent of scheduling: fanning a loop out across workers
//! cannot change what any single item sees.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 64-bit FNV-1a. Fixed constants, byte-exact on every platform.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Mix a seed, a stage label, and a salt into a single 64-bit stream id.
pub fn stream_id(seed: u64, label: &str, salt: u64) -> u64 {
    let mut buf = Vec::with_capacity(16 + label.len());
    buf.extend_from_slice(&seed.to_le_bytes());
    buf.extend_from_slice(label.as_bytes());
    buf.extend_from_slice(&salt.to_le_bytes());
    fnv1a64(&buf)
}

/// Derive the RNG for one (seed, stage, item) triple.
pub fn derive(seed: u64, label: &str, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_id(seed, label, salt))
}
