//! Seeded randomness.
//!
//! Every random draw in the crate goes through [`Rng`] (ChaCha8, seeded via
//! `SeedableRng::seed_from_u64`), which produces the same stream on every
//! platform. Child seeds come from [`derive_seed`]:
//!
//! ```text
//! derive_seed(base, stream, index) =
//!     splitmix64(splitmix64(base ^ stream * 0x9E3779B97F4A7C15) + index)
//! ```
//!
//! so any instance or trial can be regenerated from the top-level seed, its
//! stream tag and its index alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tag for per-instance seeds within a suite.
pub const STREAM_INSTANCE: u64 = 1;
/// Stream tag for per-trial seeds of a heuristic run.
pub const STREAM_TRIAL: u64 = 2;
/// Stream tag for the heuristic that warm-starts the exact solver.
pub const STREAM_WARM_START: u64 = 3;
/// Per-instance method seeds inside a benchmark run.
pub const STREAM_BENCH: u64 = 4;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let s = splitmix64(base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    splitmix64(s.wrapping_add(index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        assert_eq!(derive_seed(7, STREAM_TRIAL, 3), derive_seed(7, STREAM_TRIAL, 3));
        assert_ne!(derive_seed(7, STREAM_TRIAL, 3), derive_seed(7, STREAM_TRIAL, 4));
        assert_ne!(derive_seed(7, STREAM_TRIAL, 3), derive_seed(7, STREAM_INSTANCE, 3));
    }

    #[test]
    fn splitmix_reference_value() {
        // first output of the reference SplitMix64 seeded with 0
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn rng_is_reproducible() {
        let a: Vec<u64> = (0..4).map({
            let mut r = rng_from_seed(42);
            move |_| r.random()
        }).collect();
        let b: Vec<u64> = (0..4).map({
            let mut r = rng_from_seed(42);
            move |_| r.random()
        }).collect();
        assert_eq!(a, b);
    }
}
