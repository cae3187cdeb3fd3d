//! Deterministic seed derivation.
//!
//! Every random stream in the toolkit is derived from one base seed plus a
//! list of string tags (e.g. `["trace", benchmark, sku_id]`), so results are
//! independent of scheduling order and reproducible across runs. The hash is
//! FNV-1a, which is stable across platforms and releases (std's `Hasher` is
//! not guaranteed to be).

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over a byte slice.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Derives a child seed from a base seed and a tag path.
pub fn derive_seed(base: u64, tags: &[&str]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in &base.to_le_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    for tag in tags {
        // NUL separator keeps ["ab","c"] distinct from ["a","bc"].
        for &b in tag.as_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
        h ^= 0;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// A ChaCha stream seeded from `derive_seed(base, tags)`.
pub fn rng_for(base: u64, tags: &[&str]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tags))
}
