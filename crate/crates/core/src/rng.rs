//! Deterministic substream derivation.
//!
//! Every source of randomness in a run is a named substream of the single
//! run seed, so artifacts are reproducible regardless of how work is split
//! across threads: a walk's stream depends only on (seed, node, repeat), a
//! training phase's stream only on (seed, label, iteration, shard).

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; decorrelates nearby inputs.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn label_hash(label: &str) -> u64 {
    // FNV-1a, enough to separate the handful of fixed labels we use.
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derive an independent RNG from the run seed, a fixed label and two indices.
pub fn substream(seed: u64, label: &str, a: u64, b: u64) -> ChaCha8Rng {
    let mut s = mix(seed ^ label_hash(label));
    s = mix(s ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    s = mix(s ^ b.wrapping_mul(0xc2b2_ae3d_27d4_eb4f));
    ChaCha8Rng::seed_from_u64(s)
}
