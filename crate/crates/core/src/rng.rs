//! Counter-based deterministic random streams.
//!
//! Every random draw in the crate flows through [`stream_rng`], which keys a
//! ChaCha stream by `(seed, stream, tag)`. Streams are independent of each
//! other and of evaluation order, so fixtures regenerate identically across
//! runs and platforms.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Domain tags keeping unrelated subsystems on disjoint streams.
pub(crate) mod tags {
    pub const SYNTH: &[u8; 8] = b"synthgen";
    pub const POLY_SAMPLING: &[u8; 8] = b"polysamp";
    pub const GAN_GENERATOR: &[u8; 8] = b"ganinitG";
    pub const GAN_DISCRIMINATOR: &[u8; 8] = b"ganinitD";
    pub const EPOCH_SHUFFLE: &[u8; 8] = b"epochmix";
    pub const FOLD_PLAN: &[u8; 8] = b"foldplan";
}

/// A ChaCha RNG keyed by `(seed, stream, tag)`.
pub(crate) fn stream_rng(seed: u64, stream: u64, tag: &[u8; 8]) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream.to_le_bytes());
    key[16..24].copy_from_slice(tag);
    ChaCha12Rng::from_seed(key)
}

/// Stable 64-bit FNV-1a hash, used for run ids and derived seeds.
pub(crate) fn stable_hash64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Mixes a base seed with a stream index into a new seed.
pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut bytes = [0u8; 16];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..].copy_from_slice(&stream.to_le_bytes());
    stable_hash64(&bytes)
}
