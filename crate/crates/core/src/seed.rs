//! Seed derivation for repeated experiments.

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for repeat `repeat` at grid index `grid`:
/// `splitmix64(splitmix64(base ^ splitmix64(repeat)) ^ splitmix64(grid + 2^32))`.
pub fn derive_seed(base: u64, repeat: u64, grid: u64) -> u64 {
    let a = splitmix64(base ^ splitmix64(repeat));
    splitmix64(a ^ splitmix64(grid.wrapping_add(1 << 32)))
}
