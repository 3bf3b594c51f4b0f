//! Scalar abstraction shared by the numeric modules.
//!
//! Everything that evaluates the likelihood, its bounds or its linearization
//! is written against [`Real`] so the same code runs in `f32` and `f64`.
//! Edge counts and degree sums stay integral (`u64`) and are converted at
//! the point of use.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the solvers.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant, panicking only if the target type cannot
    /// represent finite values (never for `f32`/`f64`).
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_count(x: u64) -> Self {
        Self::from_u64(x).expect("count fits in scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Display
        + LowerExp
        + Sum
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Default
        + Send
        + Sync
        + 'static
{
}

/// `x * ln(y)` with the limit convention `0 * ln(0) = 0`.
#[inline]
pub fn xlogy<T: Real>(x: T, y: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        x * y.ln()
    }
}

/// `ln(n!)`, accumulated exactly as a sum of logarithms.
pub fn ln_factorial<T: Real>(n: u64) -> T {
    (2..=n).map(|k| T::from_count(k).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xlogy_limits() {
        assert_eq!(xlogy(0.0_f64, 0.0), 0.0);
        assert_eq!(xlogy(1.0_f64, 0.0), f64::NEG_INFINITY);
        assert!((xlogy(2.0_f64, std::f64::consts::E) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn ln_factorial_small() {
        assert_eq!(ln_factorial::<f64>(0), 0.0);
        assert_eq!(ln_factorial::<f64>(1), 0.0);
        assert!((ln_factorial::<f64>(5) - 120f64.ln()).abs() < 1e-12);
        assert!((ln_factorial::<f32>(4) - 24f32.ln()).abs() < 1e-5);
    }
}
