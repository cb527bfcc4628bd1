//! Deterministic offline embedder: seeded feature-hashed bag of tokens.
//!
//! Each whitespace token is hashed with seeded FNV-1a/64; the hash picks a
//! bucket (high bits) and a sign (low bit). Texts sharing the same token
//! multiset embed identically, and overlapping vocabularies land in shared
//! buckets, so cosine similarity tracks lexical overlap — enough structure
//! for retrieval fixtures without any model inference.

use crate::tokenize::tokens;

use super::{content_key, EmbeddingVector};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub(crate) fn fnv1a64(seed: u64, bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET ^ seed;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Raw (un-normalized) feature-hash accumulation for `text`.
pub(crate) fn stub_raw(seed: u64, dimension: usize, text: &str) -> Vec<f64> {
    let mut acc = vec![0.0f64; dimension];
    for token in tokens(text) {
        let hash = fnv1a64(seed, token.as_bytes());
        let bucket = ((hash >> 1) % dimension as u64) as usize;
        let sign = if hash & 1 == 0 { 1.0 } else { -1.0 };
        acc[bucket] += sign;
    }
    acc
}

/// Embed `text` with the deterministic stub.
///
/// Returns the unit vector and a flag marking degenerate (token-free) input,
/// which maps to the first basis vector.
pub fn stub_embed(seed: u64, dimension: usize, text: &str) -> (EmbeddingVector, bool) {
    debug_assert!(dimension >= 2);
    let key = content_key(&format!("stub-{seed}"), text);
    EmbeddingVector::from_raw(key, stub_raw(seed, dimension, text))
}
