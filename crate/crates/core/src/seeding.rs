//! Stable hashing for seeds and feature indices.
//!
//! `std`'s `DefaultHasher` is not guaranteed stable across releases, and
//! persisted artifacts depend on these values, so both functions are fixed
//! here: 64-bit FNV-1a for byte strings and the splitmix64 finalizer for
//! combining integers.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over raw bytes.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive combination of integers into one seed.
pub fn mix(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5eed_u64, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Seed for one record: `hash(global seed, tweet_id, epoch)`.
pub fn record_seed(seed: u64, tweet_id: &str, epoch: u32) -> u64 {
    mix(&[seed, fnv1a(tweet_id.as_bytes()), epoch as u64])
}
