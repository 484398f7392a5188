//! Deterministic seed derivation so parallel work units get independent,
//! reproducible RNG streams.

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream seed for work unit `(a, b)` under a base seed.
pub(crate) fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    mix(mix(base ^ a.wrapping_mul(0xa076_1d64_78bd_642f)) ^ b.wrapping_mul(0xe703_7ed1_a0b4_28db))
}
