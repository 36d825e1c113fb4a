//! Seeding scheme.
//!
//! Every random draw comes from a ChaCha8 stream keyed by `(seed, stream)`.
//! Independent consumers of the same seed (innovations, masks, supports) use
//! distinct stream ids, and Monte Carlo trial `i` uses stream `i` of its seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_SUPPORT: u64 = 0x5350;
pub const STREAM_INNOVATIONS: u64 = 0x494e;
pub const STREAM_MASK: u64 = 0x4d41;
pub const STREAM_PROBE: u64 = 0x5052;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `hash64(master, a, b)`: splitmix64 folded over the three words.
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    let h = splitmix64(master);
    let h = splitmix64(h ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    splitmix64(h ^ b.wrapping_mul(0xc2b2_ae3d_27d4_eb4f))
}
