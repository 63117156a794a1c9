//! Keyed random streams.
//!
//! Every stochastic call site derives its own ChaCha stream from the run seed
//! plus a tuple of integer keys (step, basis index, ...). A stream depends only
//! on its keys, so results never depend on which thread drew first.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Domain tags so that streams for different purposes never collide.
pub mod tag {
    pub const WALKER: u64 = 0x5741_4c4b;
    pub const ROW: u64 = 0x524f_5753;
    pub const SIGN: u64 = 0x5349_474e;
    pub const DIAG: u64 = 0x4449_4147;
    pub const INIT: u64 = 0x494e_4954;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream for `seed` and an ordered key tuple.
pub fn stream(seed: u64, keys: &[u64]) -> StreamRng {
    let mut h = splitmix64(seed);
    for &k in keys {
        h = splitmix64(h ^ splitmix64(k.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    let mut bytes = [0u8; 32];
    let mut s = h;
    for chunk in bytes.chunks_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}
