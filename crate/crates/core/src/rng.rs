use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes a seed with an index into a new, well-separated 64-bit seed.
///
/// SplitMix64 finalizer over `seed ^ golden * (index + 1)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent random stream number `index` under `seed`.
///
/// Streams are ChaCha stream ids, so `(seed, index)` pairs never overlap.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
