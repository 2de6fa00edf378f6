//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point type the models, divergences and tests are generic over.
///
/// Implemented for `f32` and `f64`. The tolerances quoted throughout the crate
/// (1e-10 symmetry checks, 1e-12 normalisation) assume `f64`; `f32` is
/// supported for throughput experiments where those guarantees are relaxed.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + fmt::Debug + fmt::Display + 'static
{
    /// Converts an `f64` constant into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    /// Lossy conversion to `f64` (exact for `f32` and `f64`).
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::lit(n as f64)
    }

    #[inline]
    fn neg_infinity() -> Self {
        Self::lit(f64::NEG_INFINITY)
    }

    #[inline]
    fn infinity() -> Self {
        Self::lit(f64::INFINITY)
    }

    /// `ln(1 + x)` evaluated through `f64` for accuracy near zero.
    #[inline]
    fn ln_1p_f(self) -> Self {
        Self::lit(self.as_f64().ln_1p())
    }

    /// `exp(x) - 1` evaluated through `f64` for accuracy near zero.
    #[inline]
    fn exp_m1_f(self) -> Self {
        Self::lit(self.as_f64().exp_m1())
    }

    /// Machine epsilon of the type.
    fn eps() -> Self;
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// `ln(sqrt(2 pi))`.
#[inline]
pub fn ln_sqrt_2pi<T: Real>() -> T {
    T::lit(0.918_938_533_204_672_8)
}

/// Numerically stable `ln(sum(exp(v)))`. Returns `-inf` for an empty slice or
/// when every entry is `-inf`.
pub fn log_sum_exp<T: Real>(values: &[T]) -> T {
    let max = values
        .iter()
        .copied()
        .fold(T::neg_infinity(), |acc, v| if v > acc { v } else { acc });
    if !max.is_finite() {
        return max;
    }
    let sum = values
        .iter()
        .fold(T::zero(), |acc, &v| acc + (v - max).exp());
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp::<f64>(&[]), f64::NEG_INFINITY);
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
        let v = log_sum_exp(&[-1000.0_f64, -1000.0]);
        assert!((v - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        let v = log_sum_exp(&[1000.0_f32, 0.0]);
        assert!((v - 1000.0).abs() < 1e-3);
    }

    #[test]
    fn ln_sqrt_2pi_matches_std() {
        let direct = (2.0 * std::f64::consts::PI).sqrt().ln();
        assert!((ln_sqrt_2pi::<f64>() - direct).abs() < 1e-15);
    }
}
