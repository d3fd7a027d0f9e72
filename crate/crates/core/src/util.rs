//! Small numeric helpers shared across modules.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Absolute tolerance for threshold comparisons on accumulated mass and
/// rounding classifications.
pub const MASS_TOL: f64 = 1e-9;

/// `⌈log₂ x⌉` for `x ≥ 1`; `0` for `x ≤ 1`.
pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

/// `⌈log₂ x⌉` for real `x`, clamped at zero.
pub fn ceil_log2_f(x: f64) -> u32 {
    if x <= 1.0 {
        0
    } else {
        let c = x.log2().ceil();
        // guard against log2 rounding up an exact power of two
        let c = if (c - 1.0).exp2() >= x { c - 1.0 } else { c };
        c as u32
    }
}

/// Deterministic RNG for a seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// RNG for stream `stream` of a master seed; streams are independent and
/// reproducible regardless of the order in which they are drawn.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed; `derive_seed(s, 0) == s`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Success probability of one step in which machines with probabilities
/// `ps` all work on the same job: `1 - Π(1 - p)`.
pub fn success_probability<I: IntoIterator<Item = f64>>(ps: I) -> f64 {
    1.0 - ps.into_iter().fold(1.0, |acc, p| acc * (1.0 - p))
}
