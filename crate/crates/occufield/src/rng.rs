//! Counter-based splittable random streams.
//!
//! Every replicate draws from its own ChaCha stream derived deterministically
//! from `(master_seed, replicate, substream)`. Streams are disjoint by
//! construction (ChaCha's 64-bit stream counter), so batch results do not
//! depend on worker count or scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Substream carrying the field dynamics of a replicate.
pub const SUBSTREAM_FIELD: u64 = 0;
/// Substream carrying the sampling walk of a replicate.
pub const SUBSTREAM_WALK: u64 = 1;
/// Substream used by bootstrap resampling.
pub const SUBSTREAM_BOOTSTRAP: u64 = 2;
/// Substream for anything else (shuffles, auxiliary draws).
pub const SUBSTREAM_AUX: u64 = 3;

const SUBSTREAMS_PER_REPLICATE: u64 = 4;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Expand a 64-bit master seed into a full 256-bit ChaCha key.
fn expand_key(master_seed: u64) -> [u8; 32] {
    let mut state = master_seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// Deterministic sub-seed for a named stage of a larger computation (for
/// example one grid point of an experiment).
pub fn derive_seed(master_seed: u64, salt: u64) -> u64 {
    let mut state = master_seed ^ salt.wrapping_mul(0xd1b5_4a32_d192_ed03);
    splitmix64(&mut state)
}

/// The generator for one `(replicate, substream)` pair.
///
/// Regenerating with the same arguments reproduces the stream bit-exactly.
pub fn substream(master_seed: u64, replicate: u64, sub: u64) -> ChaCha8Rng {
    debug_assert!(sub < SUBSTREAMS_PER_REPLICATE);
    let mut rng = ChaCha8Rng::from_seed(expand_key(master_seed));
    rng.set_stream(replicate * SUBSTREAMS_PER_REPLICATE + sub);
    rng
}
