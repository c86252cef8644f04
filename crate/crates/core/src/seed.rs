//! Seed derivation shared by every stochastic stage.
//!
//! A per-item seed is a pure function of `(global_seed, stream_id, index)`,
//! so results never depend on worker count or processing order:
//!
//! ```text
//! h    = fnv1a64(stream_id bytes)
//! seed = splitmix64(global_seed ^ splitmix64(h ^ splitmix64(index)))
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Seed for item `index` of stream `stream_id` (a sequence id, usually).
pub fn derive_seed(global_seed: u64, stream_id: &str, index: u64) -> u64 {
    let h = fnv1a64(stream_id.as_bytes());
    splitmix64(global_seed ^ splitmix64(h ^ splitmix64(index)))
}

/// ChaCha8 generator on an independent stream of the same seed.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
