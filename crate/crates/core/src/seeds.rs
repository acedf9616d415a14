//! Deterministic RNG stream splitting.
//!
//! Every Monte-Carlo task derives its own ChaCha stream from
//! (master seed, module tag, trial index) through a splitmix64 chain, so
//! results do not depend on scheduling order or thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub const TAG_MATRIX: u64 = 0x4d41_5452;
pub const TAG_SIGNAL: u64 = 0x5349_4721;
pub const TAG_NOISE: u64 = 0x4e4f_4953;
pub const TAG_CODE: u64 = 0x434f_4445;
pub const TAG_CURVE: u64 = 0x4355_5256;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for one (module, trial) cell under a master seed.
pub fn stream_rng(master: u64, module_tag: u64, trial: u64) -> ChaCha12Rng {
    let mut state = master ^ module_tag.rotate_left(17) ^ trial.wrapping_mul(0xd134_2543_de82_ef95);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}
