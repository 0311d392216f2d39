//! Seed splitting. A single run seed fans out into one independent ChaCha
//! stream per purpose, so adding randomness in one place never shifts another.
//!
//! Derived seed = splitmix64(seed ⊕ splitmix64(tag + sub · 2¹⁶)), where `tag` is
//! the purpose's fixed `u64` (see [`Stream`]) and `sub` a sub-index such as the
//! restart number or the dilation epoch.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purposes that draw random numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init,
    Dropout,
    Dilation,
    KMeans,
    Synthetic,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Init => 0x1001,
            Stream::Dropout => 0x2002,
            Stream::Dilation => 0x3003,
            Stream::KMeans => 0x4004,
            Stream::Synthetic => 0x5005,
        }
    }
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, stream: Stream, sub: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.tag().wrapping_add(sub.wrapping_mul(0x10000))))
}

pub fn stream_rng(seed: u64, stream: Stream, sub: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, sub))
}
