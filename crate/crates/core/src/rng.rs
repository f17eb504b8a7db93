//! Seed derivation.
//!
//! One 64-bit master seed reproduces every random choice. A labeled stream
//! is a ChaCha8 generator keyed by four SplitMix64 outputs started from
//! `master ^ fnv1a64(label)`; ChaCha's 64-bit stream id then splits that key
//! into independent per-column or per-attempt substreams without any
//! coordination between them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer step; advances `state` and returns the next output.
#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

/// Generator for the stage called `label` under `master`.
pub fn stream(master: u64, label: &str) -> ChaCha8Rng {
    let mut state = master ^ fnv1a64(label.as_bytes());
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Substream `index` of the stage `label`.
pub fn substream(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut rng = stream(master, label);
    rng.set_stream(index);
    rng
}

/// A derived 64-bit seed, used to hand a child computation its own master.
pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    let mut state = master ^ fnv1a64(label.as_bytes());
    let a = splitmix64(&mut state);
    let mut s2 = a ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    splitmix64(&mut s2)
}
