//! Scalar abstraction for the numeric pipeline.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, NumAssignOps};

/// Floating-point scalar the sample-domain code is generic over.
///
/// Implemented for `f32` and `f64`. The bounds cover ordinary float math,
/// compound assignment, accumulation, and `ndarray` linear algebra.
pub trait Scalar:
    Float
    + FloatConst
    + NumAssignOps
    + Sum
    + Debug
    + Display
    + ndarray::LinalgScalar
    + ndarray::ScalarOperand
    + Send
    + Sync
    + 'static
{
    /// Conversion from an `f64` constant (rounds for `f32`).
    fn from_f64(v: f64) -> Self;
    /// Widening conversion to `f64`.
    fn into_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn into_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn into_f64(self) -> f64 {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean<S: Scalar>(xs: &[S]) -> S {
        let n = S::from_f64(xs.len() as f64);
        xs.iter().copied().sum::<S>() / n
    }

    #[test]
    fn generic_math_works_for_both_widths() {
        let a32 = [1.0f32, 2.0, 3.0];
        let a64 = [1.0f64, 2.0, 3.0];
        assert_eq!(mean(&a32), 2.0f32);
        assert_eq!(mean(&a64), 2.0f64);
    }

    #[test]
    fn conversions_round_trip() {
        assert_eq!(f32::from_f64(0.25).into_f64(), 0.25);
        assert_eq!(f64::from_f64(0.1), 0.1);
    }
}
