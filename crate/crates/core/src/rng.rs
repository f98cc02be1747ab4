//! Counter-based seed splitting. Every random stream in the crate is derived
//! from the user's 64-bit seed plus a component tag and integer coordinates,
//! so any stage can be replayed in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Component tags mixed into derived seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Separator = 1,
    Rounding = 2,
    Equipartition = 3,
    Search = 4,
    AuditRounding = 5,
    Equalize = 6,
    Cascade = 7,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `(seed, stream, coords...)`.
pub fn derive(seed: u64, stream: Stream, coords: &[u64]) -> u64 {
    let mut h = splitmix64(seed ^ splitmix64(stream as u64));
    for &c in coords {
        h = splitmix64(h ^ splitmix64(c.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    h
}

pub fn stream_rng(seed: u64, stream: Stream, coords: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, stream, coords))
}
