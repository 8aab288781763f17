//! Deterministic seed derivation and content hashing.
//!
//! Every stochastic stage in the pipeline derives its own stream from a root
//! seed and a textual tag, so stages can run in any order (or in parallel)
//! without perturbing each other. Derivation is a fixed bit-level recipe
//! (FNV-1a over the tag, mixed through splitmix64), independent of platform
//! and of any std hasher, so manifests replay bit-identically.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x1000_0000_01b3;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derive a child seed from a root seed and a stage tag.
pub fn derive(root: u64, tag: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(root ^ h)
}

/// A reproducible RNG for the stage identified by `tag`.
pub fn rng(root: u64, tag: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(root, tag))
}

/// Lowercase hex SHA-256 of `bytes`; used for provenance hashes.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
