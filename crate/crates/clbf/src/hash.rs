//! Seeded 64-bit hashing for Bloom filter probing.
//!
//! Everything here is fixed arithmetic on `u64` words, so hash values are
//! identical across platforms and runs for the same bytes and seed. A query
//! is hashed over its identity bytes once into a [`PreHash`]; each filter
//! then mixes the pair with its own seed, so probing several filters does
//! not rescan the input.

/// 64-bit finalizer with full avalanche (the SplitMix64 output mix).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const P1: u64 = 0x9E37_79B1_85EB_CA87;
const P2: u64 = 0xC2B2_AE3D_27D4_EB4F;
const P3: u64 = 0x1656_67B1_9E37_79F9;
const P4: u64 = 0x2754_0A2F_9E37_79B9;

/// Hash arbitrary bytes under a seed.
///
/// Processes 8-byte little-endian chunks through a multiply-rotate
/// absorption and finishes with [`mix64`]; the trailing partial chunk and
/// the length are folded in so prefixes do not collide.
pub fn hash_bytes(bytes: &[u8], seed: u64) -> u64 {
    let mut h = seed.wrapping_add(P3).wrapping_add(bytes.len() as u64);
    let mut chunks = bytes.chunks_exact(8);
    for chunk in &mut chunks {
        let w = u64::from_le_bytes(chunk.try_into().unwrap());
        h ^= mix64(w.wrapping_mul(P2));
        h = h.rotate_left(27).wrapping_mul(P1).wrapping_add(P4);
    }
    let mut tail = 0u64;
    for (i, &b) in chunks.remainder().iter().enumerate() {
        tail |= (b as u64) << (8 * i);
    }
    if !chunks.remainder().is_empty() {
        h ^= mix64(tail.wrapping_mul(P2));
        h = h.rotate_left(31).wrapping_mul(P1);
    }
    mix64(h ^ (bytes.len() as u64))
}

/// Seed-independent digest of one query's identity bytes.
///
/// The two words are hashed under distinct fixed seeds; per-filter probe
/// hashes are derived from this pair without touching the bytes again.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreHash {
    pub a: u64,
    pub b: u64,
}

const PREHASH_SEED_A: u64 = 0x5851_F42D_4C95_7F2D;
const PREHASH_SEED_B: u64 = 0x1405_7B7E_F767_814F;

pub fn prehash(bytes: &[u8]) -> PreHash {
    PreHash {
        a: hash_bytes(bytes, PREHASH_SEED_A),
        b: hash_bytes(bytes, PREHASH_SEED_B),
    }
}

/// Two probe hashes for one filter: `position_i = (h1 + i*h2) mod m`.
///
/// `h2` is forced odd so the probe stride never degenerates.
#[inline]
pub fn probe_pair(ph: PreHash, filter_seed: u64) -> (u64, u64) {
    let h1 = mix64(ph.a ^ filter_seed);
    let h2 = mix64(ph.b ^ filter_seed.rotate_left(32)) | 1;
    (h1, h2)
}

/// Structural roles used when deriving per-filter seeds from a run seed.
///
/// Filters occupying the same structural position in different structures
/// (e.g. the first trunk filter of a cascade and the pre-filter of a
/// sandwiched LBF) share a role and index, hence a seed, so differential
/// tests compare structure rather than hash noise.
pub mod role {
    /// A stand-alone classical filter (also the depth-0 cascade fallback).
    pub const SOLO: u64 = 0;
    /// Trunk filter at depth d (also a sandwiched pre-filter at index 1).
    pub const TRUNK: u64 = 1;
    /// Branch filter at depth d.
    pub const BRANCH: u64 = 2;
    /// Final filter for region k (also a sandwiched backup at index 1 and
    /// partitioned-LBF region filters).
    pub const FINAL: u64 = 3;
}

/// Deterministic per-filter seed from a run-level seed.
pub fn derive_seed(run_seed: u64, role: u64, index: u64) -> u64 {
    mix64(mix64(mix64(run_seed) ^ role) ^ index)
}
