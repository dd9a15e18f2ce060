//! Counter-based seed derivation.
//!
//! Child seeds depend only on the parent seed and the stream index, so adding
//! components or labels never perturbs the seeds of earlier ones.

/// SplitMix64 finaliser applied to `root` mixed with `stream`.
pub fn derive_seed(root: u64, stream: u64) -> u64 {
    let mut z = root
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
