//! Seed derivation for independent runs.

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a list of coordinates.
pub fn derive(parent: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix64(parent), |acc, &p| mix64(acc ^ mix64(p)))
}
